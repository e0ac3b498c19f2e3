/**
 * Microphone capture for the recording pane.
 *
 * Captures via MediaRecorder, decodes through an AudioContext, resamples to
 * 16 kHz mono, and runs the local SNR gate; only accepted clips are encoded
 * to WAV for upload. Demo mode feeds a picked file through the same gate.
 */

import { SNR_CONSTANTS } from "./constants.js";
import { estimateSnr, type SnrReport } from "./snr.js";
import { encodeWav } from "./wav.js";

export const TARGET_SAMPLE_RATE = 16_000;

export interface GatedClip {
  report: SnrReport;
  wavBytes: ArrayBuffer | null;
}

export function resampleToMono(buffer: AudioBuffer, targetRate = TARGET_SAMPLE_RATE): Float64Array {
  const source = buffer.getChannelData(0);
  const ratio = buffer.sampleRate / targetRate;
  const length = Math.floor(source.length / ratio);
  const out = new Float64Array(length);
  for (let i = 0; i < length; i++) {
    out[i] = source[Math.floor(i * ratio)] ?? 0;
  }
  return out;
}

/** Gate a decoded clip; returns WAV bytes only when the gate accepts. */
export function gateClip(samples: Float64Array, sampleRate: number): GatedClip {
  const report = estimateSnr(samples, sampleRate, SNR_CONSTANTS.threshold_db);
  return {
    report,
    wavBytes: report.accepted ? encodeWav(samples, sampleRate) : null,
  };
}

export async function recordClip(maxSeconds = 10): Promise<Float64Array> {
  const stream = await navigator.mediaDevices.getUserMedia({ audio: true });
  const recorder = new MediaRecorder(stream);
  const chunks: BlobPart[] = [];
  const stopped = new Promise<Blob>((resolve, reject) => {
    recorder.addEventListener("dataavailable", (event) => chunks.push(event.data));
    recorder.addEventListener("stop", () => resolve(new Blob(chunks)));
    recorder.addEventListener("error", (event) => reject(event));
  });
  recorder.start();
  setTimeout(() => {
    if (recorder.state !== "inactive") recorder.stop();
  }, maxSeconds * 1000);
  const blob = await stopped;
  stream.getTracks().forEach((track) => track.stop());

  const context = new AudioContext();
  try {
    const decoded = await context.decodeAudioData(await blob.arrayBuffer());
    return resampleToMono(decoded);
  } finally {
    await context.close();
  }
}
