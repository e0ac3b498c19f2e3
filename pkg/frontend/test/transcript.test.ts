import { describe, expect, it } from "vitest";

import type { TranscriptPayload, TranscriptSlot } from "../src/api.js";
import { buildDashboard, ResetFlow } from "../src/dashboard.js";
import {
  MANUAL_ENTRY_OPTION,
  bandColor,
  buildTranscriptView,
} from "../src/transcript.js";

function payload(slots: TranscriptSlot[]): TranscriptPayload {
  return { utterance_id: "utt-1", transcript: { slots }, passes: 10 };
}

describe("band color mapping", () => {
  it("is a pure function of the band field", () => {
    expect(bandColor("low")).toBe("green");
    expect(bandColor("medium")).toBe("yellow");
    expect(bandColor("high")).toBe("red");
  });

  it("matches the snapshot for all three bands", () => {
    const view = buildTranscriptView(
      payload([
        { word: "sicher", uncertainty: 0.02, band: "low" },
        { word: "naja", uncertainty: 0.2, band: "medium" },
        { word: "Pylikan", uncertainty: 0.45, band: "high", alternatives: ["Pylikan", "Pelikan"] },
      ]),
    );
    expect(
      view.slots.map((s) => ({ text: s.text, band: s.band, color: s.color, interactive: s.interactive })),
    ).toMatchSnapshot();
  });
});

describe("transcript view", () => {
  it("renders high slots with server-ranked alternatives plus manual fallback", () => {
    // Property over randomized payloads: every high slot is interactive and
    // keeps the server ranking order, with the manual option always last.
    let seed = 12345;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    for (let round = 0; round < 50; round++) {
      const slots: TranscriptSlot[] = [];
      const n = 1 + Math.floor(rand() * 6);
      for (let i = 0; i < n; i++) {
        const band = (["low", "medium", "high"] as const)[Math.floor(rand() * 3)]!;
        const alternatives =
          band === "high"
            ? Array.from({ length: 1 + Math.floor(rand() * 5) }, (_, k) => `alt${k}`)
            : undefined;
        slots.push({ word: `w${i}`, uncertainty: rand(), band, alternatives });
      }
      const view = buildTranscriptView(payload(slots));
      view.slots.forEach((slot, i) => {
        const source = slots[i]!;
        expect(slot.text).toBe(source.word); // text comes from the server only
        if (source.band === "high") {
          expect(slot.interactive).toBe(true);
          expect(slot.options.slice(0, -1)).toEqual(source.alternatives);
          expect(slot.options[slot.options.length - 1]).toBe(MANUAL_ENTRY_OPTION);
        } else {
          expect(slot.interactive).toBe(false);
          expect(slot.options).toEqual([]);
        }
      });
    }
  });

  it("stress case: every slot flagged still renders controls", () => {
    const slots: TranscriptSlot[] = Array.from({ length: 12 }, (_, i) => ({
      word: `w${i}`,
      uncertainty: 0.9,
      band: "high" as const,
      alternatives: [`w${i}`, "other"],
    }));
    const view = buildTranscriptView(payload(slots));
    expect(view.slots.every((s) => s.interactive && s.options.length === 3)).toBe(true);
  });
});

describe("dashboard view", () => {
  it("sorts the curve by round and difficulty by score", () => {
    const view = buildDashboard(
      [
        { round: 2, wer_eval: 0.2, minutes_interaction: 5, strategy: "uncertainty", n_corrections: 3, mean_phd: 0.2 },
        { round: 0, wer_eval: 0.6, minutes_interaction: 0, strategy: "uncertainty", n_corrections: 0, mean_phd: 0.5 },
        { round: 1, wer_eval: 0.4, minutes_interaction: 2, strategy: "uncertainty", n_corrections: 2, mean_phd: 0.3 },
      ],
      [
        { phoneme: "b", error_rate: 0.1, epistemic_mi: 0.05, phd_score: 0.15 },
        { phoneme: "a", error_rate: 0.5, epistemic_mi: 0.2, phd_score: 0.7 },
      ],
    );
    expect(view.curve.map((p) => p.round)).toEqual([0, 1, 2]);
    expect(view.difficulty.map((d) => d.phoneme)).toEqual(["a", "b"]);
    expect(view.empty).toBe(false);
  });

  it("reset flow requires an explicit confirmation", () => {
    const flow = new ResetFlow();
    expect(flow.confirm()).toBe(false);
    expect(flow.request()).toBe("confirm_needed");
    expect(flow.confirm()).toBe(true);
    expect(flow.confirm()).toBe(false);
  });
});
