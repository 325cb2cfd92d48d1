/**
 * Thin fetch client for the elicitation service. No retries here beyond
 * surfacing structured errors; conflict handling (409) is the session
 * loop's job.
 */

import type {
  QueryEnvelope,
  SessionRecord,
  TranscriptPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parse<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    const code = body && typeof body.error === "string" ? body.error : "http";
    const message =
      body && typeof body.message === "string"
        ? body.message
        : `HTTP ${response.status}`;
    throw new ApiError(response.status, code, message);
  }
  return body as T;
}

export class SessionClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: typeof fetch = (...args) => fetch(...args),
  ) {}

  async createSession(
    net: unknown,
    scenario: unknown,
    config: Record<string, unknown> = {},
  ): Promise<SessionRecord> {
    const response = await this.fetchImpl(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ net, scenario, config }),
    });
    return parse<SessionRecord>(response);
  }

  async getSession(id: string): Promise<SessionRecord> {
    return parse<SessionRecord>(
      await this.fetchImpl(`${this.baseUrl}/sessions/${id}`),
    );
  }

  async getQuery(id: string): Promise<QueryEnvelope> {
    return parse<QueryEnvelope>(
      await this.fetchImpl(`${this.baseUrl}/sessions/${id}/query`),
    );
  }

  async submitResponse(
    id: string,
    queryId: number,
    responseIndex: number,
  ): Promise<SessionRecord> {
    const response = await this.fetchImpl(`${this.baseUrl}/sessions/${id}/responses`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ query_id: queryId, response_index: responseIndex }),
    });
    return parse<SessionRecord>(response);
  }

  async getTranscript(id: string): Promise<TranscriptPayload> {
    return parse<TranscriptPayload>(
      await this.fetchImpl(`${this.baseUrl}/sessions/${id}/transcript`),
    );
  }
}
