/** Wire types, mirroring the server's JSON exactly. No client-side extras:
 * every field here is something the server actually sent. */

export type Stage =
  | "Registered"
  | "LoC"
  | "Session1"
  | "Session2"
  | "Session3"
  | "Survey"
  | "Done";

export type SessionMode = "Automated" | "Discretion";
export type Strategy = "Long" | "Holding" | "Short";
export type TradeAction = "Buy" | "Hold" | "Sell";

export type AllowedAction =
  | "submit_loc"
  | "select_mode"
  | "open_session"
  | "choose_strategy"
  | "submit_decision"
  | "submit_survey";

export interface ChartWindow {
  closes: number[];
  dates: string[];
  end_date: string;
}

/** One settled session, as revealed by the server after settlement. */
export interface SessionResult {
  session: number;
  mode: SessionMode;
  usd: number;
  eth: number;
  roi: number;
}

/** The server's visible_state payload. GET /state returns it, and every
 * action POST acknowledges with a fresh one. */
export interface ClientView {
  subject_id: string;
  stage: Stage;
  treatment: "A" | "B" | null;
  allowed_actions: AllowedAction[];
  session: number | null;
  mode: SessionMode | null;
  period: number | null;
  day: number | null;
  period_len: number;
  periods_per_session: number;
  chart: ChartWindow | null;
  results: SessionResult[] | null;
}

export interface Registration {
  subject_id: string;
  token: string;
  treatment: "A" | "B";
}

export interface LocItem {
  id: number;
  text: string;
}

/** GET /chart: the current window plus its position in the session.
 * Counters come from the server; the client never derives them. */
export interface ChartResponse extends ChartWindow {
  session: number;
  period: number;
  day: number;
  mode: SessionMode;
}

export interface ProgressRow {
  subject_id: string;
  name: string;
  stage: Stage;
  treatment: "A" | "B" | null;
  sessions_started: number;
  sessions_settled: number;
}
