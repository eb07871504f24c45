/** HTTP layer. One class, one method per endpoint, nothing clever.
 *
 * Requests are serialized through a promise chain: the game accepts one
 * action at a time per subject, and firing overlapping POSTs from a
 * double-click would only trade one 409 for another. The `onResponse`
 * hook sees every decoded payload, which is how the tests audit what the
 * client could ever have rendered.
 */

import type {
  ChartResponse,
  ClientView,
  LocItem,
  ProgressRow,
  Registration,
  SessionMode,
  SessionResult,
  Strategy,
  TradeAction,
} from "./types.js";

/** Server said no: 4xx with a JSON error body. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Could not reach the server at all (offline, refused, aborted). */
export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`server unreachable: ${String(cause)}`);
    this.name = "NetworkError";
  }
}

export interface CapturedResponse {
  method: string;
  path: string;
  status: number;
  body: unknown;
}

export interface ApiOptions {
  token?: string;
  onResponse?: (r: CapturedResponse) => void;
  fetchImpl?: typeof fetch;
}

export class ApiClient {
  token: string | undefined;
  private readonly onResponse?: (r: CapturedResponse) => void;
  private readonly fetchImpl: typeof fetch;
  private queue: Promise<unknown> = Promise.resolve();

  constructor(
    readonly baseUrl: string,
    opts: ApiOptions = {},
  ) {
    this.token = opts.token;
    this.onResponse = opts.onResponse;
    this.fetchImpl = opts.fetchImpl ?? fetch;
  }

  private request<T>(
    method: string,
    path: string,
    body?: unknown,
    token?: string,
  ): Promise<T> {
    const run = async (): Promise<T> => {
      const headers: Record<string, string> = {};
      const auth = token ?? this.token;
      if (auth) headers["Authorization"] = `Bearer ${auth}`;
      if (body !== undefined) headers["Content-Type"] = "application/json";

      let resp: Response;
      try {
        resp = await this.fetchImpl(this.baseUrl + path, {
          method,
          headers,
          body: body === undefined ? undefined : JSON.stringify(body),
        });
      } catch (err) {
        throw new NetworkError(err);
      }

      let payload: unknown = null;
      try {
        payload = await resp.json();
      } catch {
        // empty or non-JSON body; leave payload null
      }
      this.onResponse?.({ method, path, status: resp.status, body: payload });

      if (!resp.ok) {
        const errObj = (payload as { error?: { code?: string; message?: string } })
          ?.error;
        const detail = (payload as { detail?: unknown })?.detail;
        const code = errObj?.code ?? (resp.status === 422 ? "INVALID_BODY" : "HTTP");
        const message =
          errObj?.message ??
          (typeof detail === "string" ? detail : JSON.stringify(detail ?? payload));
        throw new ApiError(resp.status, code, message || resp.statusText);
      }
      return payload as T;
    };

    // Chain onto the queue; a failed request must not wedge the next one.
    const result = this.queue.then(run, run);
    this.queue = result.catch(() => undefined);
    return result;
  }

  register(name: string): Promise<Registration> {
    return this.request("POST", "/subjects", { name });
  }

  state(subjectId: string): Promise<ClientView> {
    return this.request("GET", `/subjects/${subjectId}/state`);
  }

  locItems(subjectId: string): Promise<{ items: LocItem[] }> {
    return this.request("GET", `/subjects/${subjectId}/loc`);
  }

  submitLoc(subjectId: string, answers: boolean[]): Promise<ClientView> {
    return this.request("POST", `/subjects/${subjectId}/loc`, { answers });
  }

  chart(subjectId: string): Promise<ChartResponse> {
    return this.request("GET", `/subjects/${subjectId}/chart`);
  }

  chooseStrategy(
    subjectId: string,
    period: number,
    strategy: Strategy,
  ): Promise<ClientView> {
    return this.request("POST", `/subjects/${subjectId}/strategy`, {
      period,
      strategy,
    });
  }

  submitDecision(
    subjectId: string,
    action: TradeAction,
    period: number,
    day: number,
  ): Promise<ClientView> {
    // period/day pin the decision to the day the subject was shown, so a
    // stale or duplicated click conflicts instead of spending the next day
    return this.request("POST", `/subjects/${subjectId}/decision`, {
      action,
      period,
      day,
    });
  }

  selectMode(subjectId: string, mode: SessionMode): Promise<ClientView> {
    return this.request("POST", `/subjects/${subjectId}/selection`, { mode });
  }

  results(subjectId: string): Promise<{ sessions: SessionResult[] }> {
    return this.request("GET", `/subjects/${subjectId}/results`);
  }

  submitSurvey(subjectId: string, answers: number[]): Promise<ClientView> {
    return this.request("POST", `/subjects/${subjectId}/survey`, { answers });
  }

  progress(adminToken: string): Promise<{ subjects: ProgressRow[] }> {
    return this.request("GET", "/admin/progress", undefined, adminToken);
  }
}
