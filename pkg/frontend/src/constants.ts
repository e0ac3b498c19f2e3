/**
 * Shared contracts with the backend.
 *
 * SNR_CONSTANTS mirrors the server's gate definition and is checked against
 * the exported golden/snr/constants.json in CI; BAND_COLORS is the fixed
 * uncertainty color scheme.
 */

export const SNR_CONSTANTS = {
  frame_ms: 25,
  hop_ms: 10,
  noise_percentile: 10,
  speech_percentile: 90,
  noise_floor: 1e-12,
  snr_min_db: 0.0,
  snr_max_db: 120.0,
  threshold_db: 15.0,
  min_duration_ms: 100,
  sample_scale: 32768,
} as const;

export type Band = "low" | "medium" | "high";

export const BAND_COLORS: Record<Band, string> = {
  low: "green",
  medium: "yellow",
  high: "red",
};
