/**
 * Pure view-model construction for the uncertainty heatmap.
 *
 * Transcript text is never edited locally; every slot state derives from
 * the server payload, and corrections flow back only through the API.
 */

import type { TranscriptPayload, TranscriptSlot } from "./api.js";
import { BAND_COLORS, type Band } from "./constants.js";

export const MANUAL_ENTRY_OPTION = "__manual__";

export interface SlotView {
  index: number;
  text: string;
  uncertainty: number;
  band: Band;
  color: string;
  interactive: boolean;
  /** Server-ranked alternatives followed by the manual-entry fallback. */
  options: string[];
}

export interface TranscriptView {
  utteranceId: string;
  slots: SlotView[];
}

export function bandColor(band: Band): string {
  return BAND_COLORS[band];
}

export function buildSlotView(slot: TranscriptSlot, index: number): SlotView {
  const interactive = slot.band === "high";
  const options = interactive
    ? [...(slot.alternatives ?? []), MANUAL_ENTRY_OPTION]
    : [];
  return {
    index,
    text: slot.word,
    uncertainty: slot.uncertainty,
    band: slot.band,
    color: bandColor(slot.band),
    interactive,
    options,
  };
}

export function buildTranscriptView(payload: TranscriptPayload): TranscriptView {
  return {
    utteranceId: payload.utterance_id,
    slots: payload.transcript.slots.map((slot, index) => buildSlotView(slot, index)),
  };
}
