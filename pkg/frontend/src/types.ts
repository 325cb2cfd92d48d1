/**
 * Wire types for the elicitation service. The client renders these
 * verbatim; every number shown in the UI is copied from a payload, never
 * computed locally.
 */

export interface ConstraintPayload {
  coeffs: Record<string, number>;
  constant: number;
  sense: "<=" | ">=" | "==";
  rhs: number;
}

export interface ResponsePayload {
  index: number;
  label: string;
  constraint: ConstraintPayload;
}

export interface QueryPayload {
  query_id: number;
  kind: string;
  text: string;
  cost: number;
  meta: Record<string, unknown>;
  responses: ResponsePayload[];
}

export interface RegretReportPayload {
  max_regret: Record<string, number>;
  recommended: string;
  minimax_regret: number;
  advantage: { action: string; versus: string; value: number }[];
}

export interface SessionRecord {
  id: string;
  status: "awaiting-response" | "recommended" | "stopped" | "error";
  tau: number;
  responses_applied: number;
  report: RegretReportPayload;
}

export interface QueryEnvelope extends SessionRecord {
  query: QueryPayload | null;
}

export interface TranscriptEvent {
  query_id: number;
  kind: string;
  text: string;
  response_index: number;
  response_label: string;
  constraint: ConstraintPayload;
  mmr_after: number;
}

export interface TranscriptPayload {
  id: string;
  initial_mmr: number;
  events: TranscriptEvent[];
}

export interface ServiceError {
  error: string;
  message: string;
}
