/**
 * Minimal RIFF/WAV codec for the shared format contract: 16-bit signed
 * little-endian PCM, mono. Anything else is rejected before the gate runs.
 */

import { SNR_CONSTANTS } from "./constants.js";

export class UnsupportedFormatError extends Error {}

export interface DecodedWav {
  samples: Float64Array;
  sampleRate: number;
}

export function decodeWav(buffer: ArrayBuffer): DecodedWav {
  const view = new DataView(buffer);
  const tag = (offset: number) =>
    String.fromCharCode(
      view.getUint8(offset),
      view.getUint8(offset + 1),
      view.getUint8(offset + 2),
      view.getUint8(offset + 3),
    );
  if (buffer.byteLength < 44 || tag(0) !== "RIFF" || tag(8) !== "WAVE") {
    throw new UnsupportedFormatError("not a RIFF/WAVE file");
  }
  let offset = 12;
  let sampleRate = 0;
  let dataStart = -1;
  let dataLength = 0;
  let sawFormat = false;
  while (offset + 8 <= buffer.byteLength) {
    const chunkId = tag(offset);
    const chunkSize = view.getUint32(offset + 4, true);
    if (chunkId === "fmt ") {
      const audioFormat = view.getUint16(offset + 8, true);
      const channels = view.getUint16(offset + 10, true);
      sampleRate = view.getUint32(offset + 12, true);
      const bitsPerSample = view.getUint16(offset + 22, true);
      if (audioFormat !== 1) {
        throw new UnsupportedFormatError(`expected PCM data, got format ${audioFormat}`);
      }
      if (channels !== 1) {
        throw new UnsupportedFormatError(`expected mono audio, got ${channels} channels`);
      }
      if (bitsPerSample !== 16) {
        throw new UnsupportedFormatError(`expected 16-bit samples, got ${bitsPerSample}`);
      }
      sawFormat = true;
    } else if (chunkId === "data") {
      dataStart = offset + 8;
      dataLength = chunkSize;
    }
    offset += 8 + chunkSize + (chunkSize % 2);
  }
  if (!sawFormat || dataStart < 0) {
    throw new UnsupportedFormatError("missing fmt or data chunk");
  }
  const n = Math.floor(Math.min(dataLength, buffer.byteLength - dataStart) / 2);
  const samples = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    samples[i] = view.getInt16(dataStart + 2 * i, true) / SNR_CONSTANTS.sample_scale;
  }
  return { samples, sampleRate };
}

export function encodeWav(samples: Float64Array, sampleRate: number): ArrayBuffer {
  const n = samples.length;
  const buffer = new ArrayBuffer(44 + 2 * n);
  const view = new DataView(buffer);
  const writeTag = (offset: number, text: string) => {
    for (let i = 0; i < text.length; i++) view.setUint8(offset + i, text.charCodeAt(i));
  };
  writeTag(0, "RIFF");
  view.setUint32(4, 36 + 2 * n, true);
  writeTag(8, "WAVE");
  writeTag(12, "fmt ");
  view.setUint32(16, 16, true);
  view.setUint16(20, 1, true);
  view.setUint16(22, 1, true);
  view.setUint32(24, sampleRate, true);
  view.setUint32(28, sampleRate * 2, true);
  view.setUint16(32, 2, true);
  view.setUint16(34, 16, true);
  writeTag(36, "data");
  view.setUint32(40, 2 * n, true);
  for (let i = 0; i < n; i++) {
    const scaled = Math.round(samples[i]! * SNR_CONSTANTS.sample_scale);
    view.setInt16(44 + 2 * i, Math.max(-32768, Math.min(32767, scaled)), true);
  }
  return buffer;
}
