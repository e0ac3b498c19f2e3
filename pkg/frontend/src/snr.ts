/**
 * Local SNR gate, algorithmically identical to the backend implementation:
 * 25 ms frames at a 10 ms hop, nearest-rank 10th/90th percentile energies,
 * 10*log10 ratio clamped to [0, 120] dB. Runs before any upload so
 * low-quality takes never leave the device.
 */

import { SNR_CONSTANTS } from "./constants.js";

export interface SnrReport {
  snrDb: number;
  noiseFloor: number;
  speechLevel: number;
  accepted: boolean;
  thresholdDb: number;
}

export class TooShortError extends Error {}

export function frameEnergies(samples: Float64Array, sampleRate: number): number[] {
  const frame = Math.floor((sampleRate * SNR_CONSTANTS.frame_ms) / 1000);
  const hop = Math.floor((sampleRate * SNR_CONSTANTS.hop_ms) / 1000);
  if (samples.length < frame) {
    throw new TooShortError(`clip shorter than one ${SNR_CONSTANTS.frame_ms} ms frame`);
  }
  const count = Math.floor((samples.length - frame) / hop) + 1;
  const energies = new Array<number>(count);
  for (let i = 0; i < count; i++) {
    let total = 0;
    const start = i * hop;
    for (let j = start; j < start + frame; j++) {
      const v = samples[j]!;
      total += v * v;
    }
    energies[i] = total / frame;
  }
  return energies;
}

export function nearestRank(sortedValues: number[], percentile: number): number {
  const rank = Math.max(1, Math.ceil((percentile / 100) * sortedValues.length));
  return sortedValues[rank - 1]!;
}

export function estimateSnr(
  samples: Float64Array,
  sampleRate: number,
  thresholdDb: number = SNR_CONSTANTS.threshold_db,
): SnrReport {
  const durationMs = (1000 * samples.length) / sampleRate;
  if (durationMs < SNR_CONSTANTS.min_duration_ms) {
    throw new TooShortError(`clip must be at least ${SNR_CONSTANTS.min_duration_ms} ms`);
  }
  const energies = frameEnergies(samples, sampleRate).sort((a, b) => a - b);
  const noise = nearestRank(energies, SNR_CONSTANTS.noise_percentile);
  const speech = nearestRank(energies, SNR_CONSTANTS.speech_percentile);
  let snr: number;
  if (speech <= 0) {
    snr = SNR_CONSTANTS.snr_min_db;
  } else {
    snr = 10 * Math.log10(speech / Math.max(noise, SNR_CONSTANTS.noise_floor));
  }
  snr = Math.min(SNR_CONSTANTS.snr_max_db, Math.max(SNR_CONSTANTS.snr_min_db, snr));
  return {
    snrDb: snr,
    noiseFloor: noise,
    speechLevel: speech,
    accepted: snr >= thresholdDb,
    thresholdDb,
  };
}
