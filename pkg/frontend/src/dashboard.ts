/**
 * View models for the progress dashboard: the WER-per-round curve, the
 * phoneme difficulty table, and the guarded acoustic-reset flow.
 */

import type { DifficultyEntry, MetricsEntry } from "./api.js";

export interface CurvePoint {
  round: number;
  wer: number | null;
  minutes: number;
}

export interface DashboardView {
  curve: CurvePoint[];
  difficulty: DifficultyEntry[];
  empty: boolean;
}

export function buildDashboard(
  history: MetricsEntry[],
  difficulty: DifficultyEntry[],
): DashboardView {
  const curve = [...history]
    .sort((a, b) => a.round - b.round)
    .map((entry) => ({
      round: entry.round,
      wer: entry.wer_eval,
      minutes: entry.minutes_interaction,
    }));
  const sortedDifficulty = [...difficulty].sort((a, b) =>
    b.phd_score === a.phd_score
      ? a.phoneme.localeCompare(b.phoneme)
      : b.phd_score - a.phd_score,
  );
  return { curve, difficulty: sortedDifficulty, empty: curve.length === 0 };
}

/**
 * Two-step confirmation for the acoustic reset: the first call arms it,
 * the second (with confirm) performs it.
 */
export class ResetFlow {
  private armed = false;

  request(): "confirm_needed" {
    this.armed = true;
    return "confirm_needed";
  }

  confirm(): boolean {
    if (!this.armed) {
      return false;
    }
    this.armed = false;
    return true;
  }

  cancel(): void {
    this.armed = false;
  }
}
