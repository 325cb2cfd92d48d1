/**
 * The session loop: poll status, show the pending query, submit the chosen
 * response, refresh. One mutation in flight at a time; response controls
 * are disabled while a submission is pending. A 409 (someone else answered
 * this query first) triggers a silent refetch of the new pending query; a
 * network failure surfaces a retry banner instead of looping.
 */

import { ApiError, SessionClient } from "./api.js";
import {
  renderErrorBanner,
  renderQuery,
  renderRegretHistory,
  renderStatus,
  renderTranscript,
} from "./render.js";
import type { QueryPayload, SessionRecord } from "./types.js";

interface TranscriptEntryView {
  text: string;
  response_label: string;
  mmr_after: number;
}

export class SessionView {
  readonly root: HTMLElement;
  private statusHost: HTMLElement;
  private queryHost: HTMLElement;
  private regretHost: HTMLElement;
  private transcriptHost: HTMLElement;
  private bannerHost: HTMLElement;

  constructor(container: HTMLElement) {
    this.root = container;
    this.statusHost = document.createElement("div");
    this.queryHost = document.createElement("div");
    this.regretHost = document.createElement("div");
    this.transcriptHost = document.createElement("div");
    this.bannerHost = document.createElement("div");
    for (const host of [
      this.bannerHost,
      this.statusHost,
      this.queryHost,
      this.regretHost,
      this.transcriptHost,
    ]) {
      container.appendChild(host);
    }
  }

  showStatus(record: SessionRecord): void {
    this.statusHost.replaceChildren(renderStatus(record));
  }

  showQuery(query: QueryPayload | null, onChoose: (index: number) => void): void {
    this.queryHost.replaceChildren();
    if (query) {
      this.queryHost.appendChild(renderQuery(query, onChoose));
    }
  }

  setControlsEnabled(enabled: boolean): void {
    for (const button of this.queryHost.querySelectorAll("button")) {
      (button as HTMLButtonElement).disabled = !enabled;
    }
  }

  showRegretHistory(values: number[]): void {
    this.regretHost.replaceChildren(renderRegretHistory(values));
  }

  showTranscript(entries: TranscriptEntryView[]): void {
    this.transcriptHost.replaceChildren(renderTranscript(entries));
  }

  showError(message: string, onRetry: () => void): void {
    this.bannerHost.replaceChildren(renderErrorBanner(message, onRetry));
  }

  clearError(): void {
    this.bannerHost.replaceChildren();
  }
}

export class SessionLoop {
  /** Regret values as received from the service, in arrival order. */
  readonly regretHistory: number[] = [];
  readonly transcriptEntries: TranscriptEntryView[] = [];
  private submitting = false;

  constructor(
    private client: SessionClient,
    private sessionId: string,
    private view: SessionView,
  ) {}

  /** Run until the session leaves awaiting-response; resolves with the
   * terminal record. */
  async run(): Promise<SessionRecord> {
    let record = await this.client.getSession(this.sessionId);
    this.regretHistory.push(record.report.minimax_regret);
    this.view.showStatus(record);
    this.view.showRegretHistory(this.regretHistory);
    while (record.status === "awaiting-response") {
      record = await this.askOnce();
      this.view.showStatus(record);
      this.view.showRegretHistory(this.regretHistory);
      this.view.showTranscript(this.transcriptEntries);
    }
    this.view.showQuery(null, () => {});
    return record;
  }

  private async askOnce(): Promise<SessionRecord> {
    const envelope = await this.client.getQuery(this.sessionId);
    if (!envelope.query) {
      return envelope;
    }
    const query = envelope.query;
    const choice = await this.presentQuery(query);
    try {
      this.submitting = true;
      this.view.setControlsEnabled(false);
      const record = await this.client.submitResponse(
        this.sessionId,
        query.query_id,
        choice,
      );
      this.regretHistory.push(record.report.minimax_regret);
      this.transcriptEntries.push({
        text: query.text,
        response_label: query.responses[choice]?.label ?? String(choice),
        mmr_after: record.report.minimax_regret,
      });
      this.view.clearError();
      return record;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // Someone answered this query before us; fetch the session's new
        // state and carry on. Our response was not applied.
        return this.client.getSession(this.sessionId);
      }
      if (error instanceof ApiError) {
        throw error;
      }
      // network trouble: surface a retry banner and wait for the user
      await new Promise<void>((resolve) => {
        this.view.showError("connection failed", resolve);
      });
      return this.client.getSession(this.sessionId);
    } finally {
      this.submitting = false;
      this.view.setControlsEnabled(true);
    }
  }

  private presentQuery(query: QueryPayload): Promise<number> {
    return new Promise((resolve) => {
      this.view.showQuery(query, (index) => {
        if (!this.submitting) {
          resolve(index);
        }
      });
    });
  }
}
