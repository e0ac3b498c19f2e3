/**
 * Typed client for the session server's JSON API. This is the only channel
 * through which the UI reads or mutates personalization state.
 */

export interface TranscriptSlot {
  word: string;
  uncertainty: number;
  band: "low" | "medium" | "high";
  alternatives?: string[];
}

export interface TranscriptPayload {
  utterance_id: string;
  transcript: { slots: TranscriptSlot[] };
  passes: number;
}

export interface PromptIssue {
  prompt_ref: string;
  words: string[];
  rationale: string[];
}

export interface MetricsEntry {
  round: number;
  wer_eval: number | null;
  minutes_interaction: number;
  strategy: string;
  n_corrections: number;
  mean_phd: number;
}

export interface DifficultyEntry {
  phoneme: string;
  error_rate: number;
  epistemic_mi: number;
  phd_score: number;
}

export interface CorrectionRecord {
  utterance_id: string;
  slot_index: number;
  chosen_word: string;
  source: "topk" | "manual";
  previous_word?: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    public detail: string,
    public body: unknown,
  ) {
    super(`${code}: ${detail}`);
  }
}

async function parseResponse<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const record = body as { error?: string; detail?: string };
    throw new ApiError(
      response.status,
      record.error ?? "unknown_error",
      record.detail ?? response.statusText,
      body,
    );
  }
  return body as T;
}

export class SessionClient {
  constructor(public baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  private async postJson<T>(path: string, payload: unknown): Promise<T> {
    const response = await fetch(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    return parseResponse<T>(response);
  }

  private async getJson<T>(path: string): Promise<T> {
    return parseResponse<T>(await fetch(this.url(path)));
  }

  health(): Promise<{ status: string }> {
    return this.getJson("/health");
  }

  createProfile(config: Record<string, unknown>): Promise<{ profile_id: string }> {
    return this.postJson("/profiles", config);
  }

  profile(profileId: string): Promise<Record<string, unknown>> {
    return this.getJson(`/profiles/${profileId}`);
  }

  prompts(profileId: string, n = 1): Promise<{ prompts: PromptIssue[]; phase: string }> {
    return this.getJson(`/profiles/${profileId}/prompts?n=${n}`);
  }

  simulateRecording(profileId: string, promptRef: string): Promise<{ utterance_id: string }> {
    return this.postJson(`/profiles/${profileId}/recordings`, {
      simulate: true,
      prompt_ref: promptRef,
    });
  }

  async uploadRecording(
    profileId: string,
    promptRef: string,
    wavBytes: ArrayBuffer,
  ): Promise<{ utterance_id: string }> {
    const form = new FormData();
    form.append("prompt_ref", promptRef);
    form.append("file", new Blob([wavBytes], { type: "audio/wav" }), "clip.wav");
    const response = await fetch(this.url(`/profiles/${profileId}/recordings`), {
      method: "POST",
      body: form,
    });
    return parseResponse(response);
  }

  transcribe(profileId: string, utteranceId: string): Promise<TranscriptPayload> {
    return this.postJson(`/profiles/${profileId}/transcribe`, { utterance_id: utteranceId });
  }

  transcript(profileId: string, utteranceId: string): Promise<TranscriptPayload> {
    return this.getJson(`/profiles/${profileId}/transcripts/${utteranceId}`);
  }

  submitCorrection(
    profileId: string,
    correction: CorrectionRecord,
  ): Promise<{ applied: boolean; duplicate: boolean }> {
    return this.postJson(`/profiles/${profileId}/corrections`, correction);
  }

  adapt(profileId: string): Promise<MetricsEntry> {
    return this.postJson(`/profiles/${profileId}/adapt`, {});
  }

  metrics(profileId: string): Promise<{ history: MetricsEntry[] }> {
    return this.getJson(`/profiles/${profileId}/metrics`);
  }

  difficulty(profileId: string): Promise<{ difficulty: DifficultyEntry[] }> {
    return this.getJson(`/profiles/${profileId}/difficulty`);
  }

  resetAcoustic(profileId: string): Promise<Record<string, unknown>> {
    return this.postJson(`/profiles/${profileId}/reset-acoustic`, {});
  }
}
