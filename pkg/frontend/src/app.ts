/**
 * Single-page wiring: prompt pane in large type for the speaker, correction
 * and dashboard panels beside it for the supervising family member. All
 * state lives on the server; the page re-renders from fetched payloads.
 */

import { ApiError, SessionClient, type CorrectionRecord } from "./api.js";
import { buildDashboard } from "./dashboard.js";
import { gateClip, recordClip, TARGET_SAMPLE_RATE } from "./recorder.js";
import { decodeWav } from "./wav.js";
import {
  MANUAL_ENTRY_OPTION,
  buildTranscriptView,
  type TranscriptView,
} from "./transcript.js";

interface AppState {
  client: SessionClient;
  profileId: string | null;
  promptRef: string | null;
  promptWords: string[];
  utteranceId: string | null;
  view: TranscriptView | null;
  busy: boolean;
}

const state: AppState = {
  client: new SessionClient(localStorage.getItem("speechadapt-url") ?? "http://127.0.0.1:8077"),
  profileId: null,
  promptRef: null,
  promptWords: [],
  utteranceId: null,
  view: null,
  busy: false,
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

function banner(message: string, kind: "info" | "error" = "info"): void {
  const box = document.getElementById("banner")!;
  box.textContent = message;
  box.className = `banner ${kind}`;
}

async function fetchNextPrompt(): Promise<void> {
  if (!state.profileId) return;
  const payload = await state.client.prompts(state.profileId, 1);
  const prompt = payload.prompts[0];
  if (!prompt) {
    banner("no prompts available");
    return;
  }
  state.promptRef = prompt.prompt_ref;
  state.promptWords = prompt.words;
  const pane = document.getElementById("prompt-pane")!;
  pane.replaceChildren(el("p", { class: "prompt-text" }, prompt.words.join(" ")));
}

async function recordAndGate(): Promise<void> {
  if (!state.profileId || !state.promptRef) return;
  banner("recording...");
  const samples = await recordClip(8);
  const gated = gateClip(samples, TARGET_SAMPLE_RATE);
  const meter = document.getElementById("snr-meter")!;
  meter.textContent = `SNR ${gated.report.snrDb.toFixed(1)} dB`;
  if (!gated.wavBytes) {
    banner(
      `too noisy (${gated.report.snrDb.toFixed(1)} dB < ${gated.report.thresholdDb} dB) - try again`,
      "error",
    );
    return;
  }
  await uploadClip(gated.wavBytes);
}

async function uploadPickedFile(file: File): Promise<void> {
  const decoded = decodeWav(await file.arrayBuffer());
  const gated = gateClip(decoded.samples, decoded.sampleRate);
  if (!gated.wavBytes) {
    banner(`file rejected by the local gate (${gated.report.snrDb.toFixed(1)} dB)`, "error");
    return;
  }
  await uploadClip(gated.wavBytes);
}

async function uploadClip(wavBytes: ArrayBuffer): Promise<void> {
  if (!state.profileId || !state.promptRef) return;
  try {
    const uploaded = await state.client.uploadRecording(state.profileId, state.promptRef, wavBytes);
    state.utteranceId = uploaded.utterance_id;
    banner(`recording accepted (${uploaded.utterance_id})`);
    await refreshTranscript(true);
  } catch (error) {
    if (error instanceof ApiError) {
      banner(`server rejected the clip: ${error.detail}`, "error");
    } else {
      throw error;
    }
  }
}

async function simulateRecording(): Promise<void> {
  if (!state.profileId || !state.promptRef) return;
  const uploaded = await state.client.simulateRecording(state.profileId, state.promptRef);
  state.utteranceId = uploaded.utterance_id;
  await refreshTranscript(true);
}

async function refreshTranscript(compute = false): Promise<void> {
  if (!state.profileId || !state.utteranceId) return;
  const payload = compute
    ? await state.client.transcribe(state.profileId, state.utteranceId)
    : await state.client.transcript(state.profileId, state.utteranceId);
  state.view = buildTranscriptView(payload);
  renderTranscript();
}

function renderTranscript(): void {
  const pane = document.getElementById("transcript-pane")!;
  pane.replaceChildren();
  if (!state.view) return;
  for (const slot of state.view.slots) {
    const word = el("span", { class: `word band-${slot.band}`, "data-color": slot.color }, slot.text);
    pane.append(word, document.createTextNode(" "));
    if (!slot.interactive) continue;
    const select = el("select", { class: "alternatives" });
    select.append(el("option", { value: "" }, "fix..."));
    for (const option of slot.options) {
      select.append(
        el("option", { value: option }, option === MANUAL_ENTRY_OPTION ? "type it..." : option),
      );
    }
    select.addEventListener("change", () => {
      const choice = select.value;
      if (!choice) return;
      if (choice === MANUAL_ENTRY_OPTION) {
        const manual = window.prompt("correct word:");
        if (manual) void submitCorrection(slot.index, manual.trim(), "manual");
      } else {
        void submitCorrection(slot.index, choice, "topk");
      }
    });
    pane.append(select, document.createTextNode(" "));
  }
}

async function submitCorrection(
  slotIndex: number,
  chosen: string,
  source: "topk" | "manual",
): Promise<void> {
  if (!state.profileId || !state.utteranceId || !state.view || state.busy) return;
  state.busy = true; // one in-flight mutation per profile
  try {
    const record: CorrectionRecord = {
      utterance_id: state.utteranceId,
      slot_index: slotIndex,
      chosen_word: chosen,
      source,
      previous_word: state.view.slots[slotIndex]?.text,
    };
    await state.client.submitCorrection(state.profileId, record);
    await refreshTranscript(false);
    await renderDashboard();
  } catch (error) {
    if (error instanceof ApiError) {
      banner(error.detail, "error");
    } else {
      throw error;
    }
  } finally {
    state.busy = false;
  }
}

async function renderDashboard(): Promise<void> {
  if (!state.profileId) return;
  const [metrics, difficulty] = await Promise.all([
    state.client.metrics(state.profileId),
    state.client.difficulty(state.profileId),
  ]);
  const view = buildDashboard(metrics.history, difficulty.difficulty);
  const pane = document.getElementById("dashboard-pane")!;
  pane.replaceChildren();
  if (view.empty) {
    pane.append(el("p", {}, "no rounds yet - record the cold-start prompts to begin"));
    return;
  }
  const curve = el("ul", { class: "wer-curve" });
  for (const point of view.curve) {
    curve.append(
      el("li", {}, `round ${point.round}: WER ${point.wer === null ? "n/a" : point.wer.toFixed(3)} (${point.minutes.toFixed(1)} min)`),
    );
  }
  const table = el("table", { class: "difficulty" });
  table.append(el("tr", {}, el("th", {}, "phoneme"), el("th", {}, "difficulty")));
  for (const entry of view.difficulty.slice(0, 10)) {
    table.append(el("tr", {}, el("td", {}, entry.phoneme), el("td", {}, entry.phd_score.toFixed(3))));
  }
  pane.append(curve, table);
}

export function wireUp(): void {
  document.getElementById("next-prompt")!.addEventListener("click", () => void fetchNextPrompt());
  document.getElementById("record")!.addEventListener("click", () => void recordAndGate());
  document.getElementById("simulate")!.addEventListener("click", () => void simulateRecording());
  document.getElementById("adapt")!.addEventListener("click", async () => {
    if (!state.profileId) return;
    try {
      await state.client.adapt(state.profileId);
      await renderDashboard();
    } catch (error) {
      if (error instanceof ApiError) banner(error.detail, "error");
      else throw error;
    }
  });
  const filePicker = document.getElementById("file-picker") as HTMLInputElement;
  filePicker.addEventListener("change", () => {
    const file = filePicker.files?.[0];
    if (file) void uploadPickedFile(file);
  });
  let resetArmed = false;
  document.getElementById("reset")!.addEventListener("click", async () => {
    if (!state.profileId) return;
    if (!resetArmed) {
      resetArmed = true;
      banner("press again to start a new acoustic baseline (lexicon and history are kept)");
      return;
    }
    resetArmed = false;
    await state.client.resetAcoustic(state.profileId);
    banner("acoustic baseline reset");
    await renderDashboard();
  });
  document.getElementById("create-profile")!.addEventListener("click", async () => {
    const config = JSON.parse(
      (document.getElementById("profile-config") as HTMLTextAreaElement).value,
    );
    const created = await state.client.createProfile(config);
    state.profileId = created.profile_id;
    banner(`profile ${created.profile_id} ready`);
    await fetchNextPrompt();
    await renderDashboard();
  });
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  wireUp();
}
