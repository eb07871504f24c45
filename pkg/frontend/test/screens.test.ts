/** Screen rendering is string-in, string-out; these tests pin the parts
 * the flow depends on: one screen per state, the right controls on it, the
 * completeness guards, and a chart that survives odd windows. */

import { describe, expect, it } from "vitest";

import { chartSvg } from "../src/chart.js";
import {
  renderScreen,
  validateLoc,
  validateSurvey,
  SURVEY_QUESTIONS,
} from "../src/screens.js";
import type { ChartWindow, ClientView, LocItem } from "../src/types.js";

function window30(): ChartWindow {
  const closes = Array.from({ length: 30 }, (_, i) => 700 + 3 * Math.sin(i) + i);
  const dates = Array.from(
    { length: 30 },
    (_, i) => `2021-02-${String(i + 1).padStart(2, "0")}`,
  );
  return { closes, dates, end_date: dates[29]! };
}

function view(over: Partial<ClientView>): ClientView {
  return {
    subject_id: "s001",
    stage: "Session1",
    treatment: "A",
    allowed_actions: [],
    session: 1,
    mode: null,
    period: null,
    day: null,
    period_len: 10,
    periods_per_session: 3,
    chart: null,
    results: null,
    ...over,
  };
}

const LOC_ITEMS: LocItem[] = Array.from({ length: 20 }, (_, i) => ({
  id: i + 1,
  text: `statement ${i + 1}`,
}));

const SETTLED = [
  { session: 1, mode: "Automated" as const, usd: 24000.1, eth: 80, roi: 0.0496 },
  { session: 2, mode: "Discretion" as const, usd: 18000.9, eth: 120, roi: -0.012 },
];

describe("one screen per server state", () => {
  const cases: Array<[string, ClientView]> = [
    ["loc", view({ stage: "LoC", allowed_actions: ["submit_loc"] })],
    [
      "open",
      view({ stage: "Session1", allowed_actions: ["open_session"], mode: "Automated" }),
    ],
    [
      "strategy",
      view({
        allowed_actions: ["choose_strategy"],
        mode: "Automated",
        period: 1,
        day: 0,
        chart: window30(),
      }),
    ],
    [
      "decision",
      view({
        allowed_actions: ["submit_decision"],
        mode: "Discretion",
        period: 0,
        day: 2,
        chart: window30(),
      }),
    ],
    [
      "select",
      view({
        stage: "Session3",
        session: 3,
        allowed_actions: ["select_mode"],
        results: SETTLED,
      }),
    ],
    ["survey", view({ stage: "Survey", allowed_actions: ["submit_survey"] })],
    ["done", view({ stage: "Done", results: SETTLED })],
  ];

  it.each(cases)("%s renders exactly one screen", (_name, v) => {
    const html = renderScreen(v, LOC_ITEMS);
    const screens = html.match(/<section class="screen /g) ?? [];
    expect(screens).toHaveLength(1);
  });
});

describe("decision screen", () => {
  const html = renderScreen(
    view({
      allowed_actions: ["submit_decision"],
      mode: "Discretion",
      period: 0,
      day: 2,
      chart: window30(),
    }),
    [],
  );

  it("offers the three orders and a disabled confirm", () => {
    expect(html).toContain("Buy 10 ETH");
    expect(html).toContain(">Hold<");
    expect(html).toContain("Sell 10 ETH");
    expect(html).toContain('data-act="confirm" disabled');
  });

  it("tells the subject where they stand, 1-based", () => {
    expect(html).toContain("Period 1 of 3, day 3 of 10");
  });

  it("plots every close it was given", () => {
    const points = html.match(/points="([^"]+)"/)?.[1] ?? "";
    expect(points.split(" ")).toHaveLength(30);
  });

  it("shows no balances mid-session", () => {
    expect(html).not.toContain("Settled sessions");
    expect(html).not.toMatch(/\broi\b/i);
  });
});

describe("strategy screen", () => {
  const html = renderScreen(
    view({
      allowed_actions: ["choose_strategy"],
      mode: "Automated",
      period: 1,
      day: 0,
      chart: window30(),
    }),
    [],
  );

  it("offers the three commitments for the coming period", () => {
    expect(html).toContain("Long (buy daily)");
    expect(html).toContain(">Holding<");
    expect(html).toContain("Short (sell daily)");
    expect(html).toContain("period 2 of 3");
  });
});

describe("selection and reveal", () => {
  const html = renderScreen(
    view({
      stage: "Session3",
      session: 3,
      allowed_actions: ["select_mode"],
      results: SETTLED,
    }),
    [],
  );

  it("offers both modes", () => {
    expect(html).toContain("Automated strategy");
    expect(html).toContain("Daily discretion");
  });

  it("reveals the two settled sessions with signed returns", () => {
    expect(html).toContain("Settled sessions");
    expect(html).toContain("+4.96%");
    expect(html).toContain("-1.20%");
    expect(html).toContain("24,000.10");
  });
});

describe("forms", () => {
  it("loc screen renders all items with True/False choices", () => {
    const html = renderScreen(
      view({ stage: "LoC", allowed_actions: ["submit_loc"] }),
      LOC_ITEMS,
    );
    expect(html.match(/name="loc-\d+"/g)).toHaveLength(40);
    expect(html).toContain("statement 20");
  });

  it("survey screen renders the full scale for every question", () => {
    const html = renderScreen(
      view({ stage: "Survey", allowed_actions: ["submit_survey"] }),
      [],
    );
    expect(SURVEY_QUESTIONS).toHaveLength(7);
    expect(html.match(/type="radio"/g)).toHaveLength(49);
  });

  it("loc guard refuses short or holey answer sets", () => {
    expect(validateLoc(new Array(19).fill(true))).toBe("expected 20 answers");
    const holey: Array<boolean | null> = new Array(20).fill(true);
    holey[7] = null;
    expect(validateLoc(holey)).toBe("1 item unanswered");
    expect(validateLoc(new Array(20).fill(false))).toBeNull();
  });

  it("survey guard counts the gaps", () => {
    const half: Array<number | null> = [5, null, 3, null, 1, 2, null];
    expect(validateSurvey(half)).toBe("3 questions unanswered");
    expect(validateSurvey([1, 2, 3, 4, 5, 6, 7])).toBeNull();
  });
});

describe("chart corner cases", () => {
  it("a flat window still renders finite coordinates", () => {
    const flat: ChartWindow = {
      closes: new Array(30).fill(731.0),
      dates: window30().dates,
      end_date: "2021-03-02",
    };
    const svg = chartSvg(flat);
    expect(svg).not.toContain("NaN");
    expect(svg).toContain("polyline");
  });

  it("a single point becomes a dot, not a crash", () => {
    const svg = chartSvg({ closes: [500], dates: ["2021-01-01"], end_date: "2021-01-01" });
    expect(svg).not.toContain("NaN");
    expect(svg).toContain("last close 500.00");
  });

  it("labels the scale with the window extremes", () => {
    const w = window30();
    const svg = chartSvg(w);
    const lo = Math.min(...w.closes);
    const hi = Math.max(...w.closes);
    expect(svg).toContain(
      lo.toLocaleString("en-US", { minimumFractionDigits: 2, maximumFractionDigits: 2 }),
    );
    expect(svg).toContain(
      hi.toLocaleString("en-US", { minimumFractionDigits: 2, maximumFractionDigits: 2 }),
    );
  });
});
