import { readFileSync } from "node:fs";
import { resolve } from "node:path";
import { describe, expect, it } from "vitest";

import { BAND_COLORS, SNR_CONSTANTS } from "../src/constants.js";

const GOLDEN = resolve(__dirname, "../../golden/snr/constants.json");

describe("shared constants contract", () => {
  it("matches the backend-exported gate constants exactly", () => {
    const frozen = JSON.parse(readFileSync(GOLDEN, "utf-8"));
    expect({ ...SNR_CONSTANTS }).toEqual(frozen);
  });

  it("pins the three-band color scheme", () => {
    expect(BAND_COLORS).toEqual({ low: "green", medium: "yellow", high: "red" });
  });
});
