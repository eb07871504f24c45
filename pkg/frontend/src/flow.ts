/** Stage-agnostic game controller. Holds the last server view and turns
 * user intents into endpoint calls; the next screen is always whatever the
 * refreshed view says, never a local guess.
 *
 * A 409 means the server is ahead of us (double click, second tab, replay
 * after refresh). That is not an error to show anyone: refetch the state
 * and render. Network failures bubble out so the shell can offer a retry
 * with the input preserved.
 */

import { ApiClient, ApiError } from "./api.js";
import type {
  ClientView,
  LocItem,
  SessionMode,
  SessionResult,
  Strategy,
  TradeAction,
} from "./types.js";

export class SubjectFlow {
  view: ClientView | null = null;
  locItems: LocItem[] = [];

  constructor(
    readonly api: ApiClient,
    readonly subjectId: string,
  ) {}

  async refresh(): Promise<ClientView> {
    this.view = await this.api.state(this.subjectId);
    if (this.view.stage === "LoC" && this.locItems.length === 0) {
      this.locItems = (await this.api.locItems(this.subjectId)).items;
    }
    return this.view;
  }

  /** Run an action; on a stage conflict fall back to a state refetch. */
  private async recovering(
    run: () => Promise<ClientView>,
  ): Promise<ClientView> {
    try {
      this.view = await run();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        return this.refresh();
      }
      throw err;
    }
    return this.view;
  }

  submitLoc(answers: boolean[]): Promise<ClientView> {
    return this.recovering(() => this.api.submitLoc(this.subjectId, answers));
  }

  /** Fetching the chart is what opens a due session on the server. */
  async openSession(): Promise<ClientView> {
    try {
      await this.api.chart(this.subjectId);
    } catch (err) {
      if (!(err instanceof ApiError && err.status === 409)) throw err;
    }
    return this.refresh();
  }

  chooseStrategy(strategy: Strategy): Promise<ClientView> {
    const period = this.view?.period;
    if (period === null || period === undefined) {
      return this.refresh();
    }
    return this.recovering(() =>
      this.api.chooseStrategy(this.subjectId, period, strategy),
    );
  }

  submitDecision(action: TradeAction): Promise<ClientView> {
    const { period, day } = this.view ?? { period: null, day: null };
    if (period === null || period === undefined || day === null || day === undefined) {
      return this.refresh();
    }
    return this.recovering(() =>
      this.api.submitDecision(this.subjectId, action, period, day),
    );
  }

  selectMode(mode: SessionMode): Promise<ClientView> {
    return this.recovering(() => this.api.selectMode(this.subjectId, mode));
  }

  submitSurvey(answers: number[]): Promise<ClientView> {
    return this.recovering(() => this.api.submitSurvey(this.subjectId, answers));
  }

  async finalResults(): Promise<SessionResult[]> {
    return (await this.api.results(this.subjectId)).sessions;
  }
}

/** What a subject would do at each screen, as data. Used by the scripted
 * headless run and handy for demos. */
export interface Script {
  loc: boolean[];
  strategy: Strategy;
  action: TradeAction;
  selection: SessionMode;
  survey: number[];
}

/** Drive a flow from wherever it stands to Done, making the scripted
 * choice at every screen. Step cap guards against a server that stops
 * advancing. */
export async function runScript(
  flow: SubjectFlow,
  script: Script,
  maxSteps = 500,
): Promise<ClientView> {
  let view = await flow.refresh();
  for (let step = 0; step < maxSteps; step++) {
    if (view.stage === "Done") return view;
    const act = view.allowed_actions[0];
    switch (act) {
      case "submit_loc":
        view = await flow.submitLoc(script.loc);
        break;
      case "select_mode":
        view = await flow.selectMode(script.selection);
        break;
      case "open_session":
        view = await flow.openSession();
        break;
      case "choose_strategy":
        view = await flow.chooseStrategy(script.strategy);
        break;
      case "submit_decision":
        view = await flow.submitDecision(script.action);
        break;
      case "submit_survey":
        view = await flow.submitSurvey(script.survey);
        break;
      default:
        throw new Error(`nothing to do at stage ${view.stage}`);
    }
  }
  throw new Error(`script did not finish in ${maxSteps} steps`);
}
