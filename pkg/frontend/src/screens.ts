/** Screen rendering: one HTML string per stage, switched entirely on what
 * the server said. The client never guesses the stage, never advances it
 * locally, and never shows a number it did not receive.
 *
 * Action buttons carry data-act/data-value attributes; main.ts wires them
 * up by delegation. Everything that takes a click goes through a selected
 * state plus an explicit confirm button, one decision per screen.
 */

import { chartSvg } from "./chart.js";
import type { ChartWindow, ClientView, LocItem, SessionResult } from "./types.js";

export const LOC_ANSWER_COUNT = 20;
export const SURVEY_ANSWER_COUNT = 7;

/** Post-game experience survey, answered 1 (not at all) to 7 (very much).
 * Only the seven ratings travel to the server. */
export const SURVEY_QUESTIONS: string[] = [
  "Did you prefer trading by a pre-committed strategy over deciding day by day?",
  "Did the automated sessions feel less stressful than the manual ones?",
  "Were you confident in the daily decisions you made yourself?",
  "Did watching the price chart change what you decided to do?",
  "Would you hand a real portfolio to a fixed trading rule?",
  "Did the game make the tradeoff between commitment and flexibility clearer?",
  "Would you play another round?",
];

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmtUsd(n: number): string {
  return n.toLocaleString("en-US", {
    minimumFractionDigits: 2,
    maximumFractionDigits: 2,
  });
}

function fmtRoi(r: number): string {
  const pct = r * 100;
  return `${pct >= 0 ? "+" : ""}${pct.toFixed(2)}%`;
}

/** Completeness guard: null means ready to send. */
export function validateLoc(answers: Array<boolean | null>): string | null {
  if (answers.length !== LOC_ANSWER_COUNT) {
    return `expected ${LOC_ANSWER_COUNT} answers`;
  }
  const missing = answers.filter((a) => a === null).length;
  if (missing > 0) return `${missing} item${missing === 1 ? "" : "s"} unanswered`;
  return null;
}

export function validateSurvey(answers: Array<number | null>): string | null {
  if (answers.length !== SURVEY_ANSWER_COUNT) {
    return `expected ${SURVEY_ANSWER_COUNT} answers`;
  }
  const missing = answers.filter((a) => a === null).length;
  if (missing > 0)
    return `${missing} question${missing === 1 ? "" : "s"} unanswered`;
  return null;
}

function resultsBlock(results: SessionResult[]): string {
  const rows = results
    .map(
      (r) =>
        `<tr><td>${r.session}</td><td>${esc(r.mode)}</td>` +
        `<td class="num">${fmtUsd(r.usd)}</td>` +
        `<td class="num">${fmtUsd(r.eth)}</td>` +
        `<td class="num roi">${fmtRoi(r.roi)}</td></tr>`,
    )
    .join("");
  return `<section class="reveal">
  <h3>Settled sessions</h3>
  <table class="results">
    <thead><tr><th>#</th><th>Mode</th><th>USD</th><th>ETH</th><th>Return</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>
</section>`;
}

function chartBlock(chart: ChartWindow): string {
  return `<div class="chart-box">${chartSvg(chart)}</div>`;
}

function confirmBar(label: string): string {
  return `<div class="confirm-bar">
  <span class="picked-label" data-role="picked">nothing selected</span>
  <button data-act="confirm" disabled>${esc(label)}</button>
</div>`;
}

export function locScreen(items: LocItem[]): string {
  const rows = items
    .map(
      (it) => `<li class="loc-item" data-item="${it.id}">
  <span class="loc-text">${esc(it.text)}</span>
  <label><input type="radio" name="loc-${it.id}" value="true"> True</label>
  <label><input type="radio" name="loc-${it.id}" value="false"> False</label>
</li>`,
    )
    .join("\n");
  return `<section class="screen screen-loc">
  <h2>Before you trade</h2>
  <p>Mark each statement True or False as it applies to you. All ${items.length} items are required.</p>
  <ol class="loc-list">${rows}</ol>
  <p class="form-error" data-role="error" hidden></p>
  <button data-act="submit-loc">Submit answers</button>
</section>`;
}

function sessionHeading(view: ClientView): string {
  const mode = view.mode ? ` · ${esc(view.mode)}` : "";
  return `<h2>Session ${view.session ?? "?"} of 3${mode}</h2>`;
}

function openSessionScreen(view: ClientView): string {
  const reveal = view.results ? resultsBlock(view.results) : "";
  const modeLine = view.mode
    ? `<p>This session runs in <strong>${esc(view.mode)}</strong> mode.</p>`
    : "";
  return `<section class="screen screen-open">
  ${sessionHeading(view)}
  ${reveal}
  ${modeLine}
  <p>A fresh account and a fresh stretch of the market are drawn when you begin.</p>
  <button data-act="open-session">Begin session ${view.session ?? ""}</button>
</section>`;
}

function selectModeScreen(view: ClientView): string {
  const reveal = view.results ? resultsBlock(view.results) : "";
  return `<section class="screen screen-select">
  ${sessionHeading(view)}
  ${reveal}
  <p>You have played both ways. Pick the mode for your final session.</p>
  <div class="choice-row">
    <button data-act="pick" data-value="Automated">Automated strategy</button>
    <button data-act="pick" data-value="Discretion">Daily discretion</button>
  </div>
  ${confirmBar("Confirm mode")}
</section>`;
}

function strategyScreen(view: ClientView): string {
  const chart = view.chart ? chartBlock(view.chart) : "";
  const period = view.period ?? 0;
  return `<section class="screen screen-strategy">
  ${sessionHeading(view)}
  <p>Commit a strategy for period ${period + 1} of ${view.periods_per_session}
  (${view.period_len} trading days). It executes without further input.</p>
  ${chart}
  <div class="choice-row">
    <button data-act="pick" data-value="Long">Long (buy daily)</button>
    <button data-act="pick" data-value="Holding">Holding</button>
    <button data-act="pick" data-value="Short">Short (sell daily)</button>
  </div>
  ${confirmBar("Commit strategy")}
</section>`;
}

function decisionScreen(view: ClientView): string {
  const chart = view.chart ? chartBlock(view.chart) : "";
  const period = view.period ?? 0;
  const day = view.day ?? 0;
  return `<section class="screen screen-decision">
  ${sessionHeading(view)}
  <p>Period ${period + 1} of ${view.periods_per_session}, day ${day + 1} of ${view.period_len}.
  Your order executes at today's close, which is not on the chart yet.</p>
  ${chart}
  <div class="choice-row">
    <button data-act="pick" data-value="Buy">Buy 10 ETH</button>
    <button data-act="pick" data-value="Hold">Hold</button>
    <button data-act="pick" data-value="Sell">Sell 10 ETH</button>
  </div>
  ${confirmBar("Confirm decision")}
</section>`;
}

function surveyScreen(view: ClientView): string {
  const reveal = view.results ? resultsBlock(view.results) : "";
  const rows = SURVEY_QUESTIONS.map((q, i) => {
    const scale = [1, 2, 3, 4, 5, 6, 7]
      .map(
        (v) =>
          `<label><input type="radio" name="q${i + 1}" value="${v}"> ${v}</label>`,
      )
      .join("");
    return `<li class="survey-item" data-q="${i + 1}">
  <span class="survey-text">${esc(q)}</span>
  <div class="scale">${scale}</div>
</li>`;
  }).join("\n");
  return `<section class="screen screen-survey">
  <h2>Almost done</h2>
  ${reveal}
  <p>Rate each statement from 1 (not at all) to 7 (very much).</p>
  <ol class="survey-list">${rows}</ol>
  <p class="form-error" data-role="error" hidden></p>
  <button data-act="submit-survey">Submit survey</button>
</section>`;
}

function doneScreen(results: SessionResult[] | null): string {
  const reveal = results ? resultsBlock(results) : "";
  return `<section class="screen screen-done">
  <h2>Finished</h2>
  <p>All three sessions are settled and your answers are recorded. Thanks for playing.</p>
  ${reveal}
</section>`;
}

function waitingScreen(label: string): string {
  return `<section class="screen screen-waiting"><p>${esc(label)}</p></section>`;
}

/** Exactly one screen per server state. `locItems` is only consulted at
 * the control-test stage. */
export function renderScreen(view: ClientView, locItems: LocItem[]): string {
  switch (view.stage) {
    case "Registered":
      return waitingScreen("Waiting for treatment assignment, reload shortly.");
    case "LoC":
      return locScreen(locItems);
    case "Session1":
    case "Session2":
    case "Session3": {
      const act = view.allowed_actions[0];
      if (act === "select_mode") return selectModeScreen(view);
      if (act === "choose_strategy") return strategyScreen(view);
      if (act === "submit_decision") return decisionScreen(view);
      return openSessionScreen(view);
    }
    case "Survey":
      return surveyScreen(view);
    case "Done":
      return doneScreen(view.results);
  }
}
