/** Story view-model: target chips, span-based highlighting, and grading.
 *
 * All numbers shown here round-trip from the service; the model never
 * recomputes SRS state or re-tokenizes the story locally.
 */

import { ApiClient, ApiError, Grade, SessionView } from "./api.js";

export type TargetStatus =
  | { kind: "ungraded" }
  | { kind: "pending"; grade: Grade }
  | { kind: "graded"; grade: Grade };

export interface TargetChip {
  word: string;
  targetKind: "new" | "review";
  requiredCount: number;
  occurrenceCount: number;
  /** Character offset of the first highlighted occurrence, if any. */
  firstSpan: [number, number] | null;
  notPresent: boolean;
  status: TargetStatus;
}

/** A story split into plain and highlighted segments, in document order. */
export interface StorySegment {
  text: string;
  highlight: string | null; // target word owning this span, if any
}

export type ViewState =
  | { kind: "loading" }
  | { kind: "error"; message: string; retryable: boolean }
  | { kind: "ready" };

export interface GradeResult {
  ok: boolean;
  error?: string;
}

export class StudyViewModel {
  state: ViewState = { kind: "loading" };
  sessionId: string | null = null;
  deckId: string;
  story = "";
  targets: TargetChip[] = [];
  segments: StorySegment[] = [];
  toast: string | null = null;

  constructor(
    private readonly api: ApiClient,
    deckId: string,
  ) {
    this.deckId = deckId;
  }

  /** Start today's session and populate the view. */
  async fetchToday(options: { mode?: string; n_new?: number; seed?: number } = {}): Promise<void> {
    this.state = { kind: "loading" };
    try {
      const view = await this.api.startSession(this.deckId, options);
      this.applySession(view);
      this.state = { kind: "ready" };
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      const retryable = !(err instanceof ApiError) || err.status >= 500;
      this.state = { kind: "error", message, retryable };
    }
  }

  applySession(view: SessionView): void {
    this.sessionId = view.session_id;
    this.story = view.story ?? "";
    this.targets = view.targets.map((t) => {
      const spans = view.target_spans[t.word] ?? [];
      const count = view.target_counts[t.word] ?? 0;
      return {
        word: t.word,
        targetKind: t.kind,
        requiredCount: t.required_count,
        occurrenceCount: count,
        firstSpan: spans.length > 0 ? spans[0] : null,
        notPresent: count === 0,
        status: { kind: "ungraded" },
      };
    });
    this.segments = segmentStory(this.story, view.target_spans);
  }

  target(word: string): TargetChip | undefined {
    return this.targets.find((t) => t.word === word);
  }

  /**
   * Grade one word. The chip flips optimistically; a server rejection rolls
   * it back to ungraded and surfaces a toast. Repeat calls while a grade is
   * pending or after success are ignored (idempotent client guard).
   */
  async gradeWord(word: string, grade: Grade): Promise<GradeResult> {
    const chip = this.target(word);
    if (!chip) {
      return { ok: false, error: `unknown target ${word}` };
    }
    if (chip.status.kind !== "ungraded") {
      return { ok: true }; // already graded or in flight: ignore
    }
    chip.status = { kind: "pending", grade };
    try {
      await this.api.submitReview(this.deckId, word, grade);
      chip.status = { kind: "graded", grade };
      return { ok: true };
    } catch (err) {
      chip.status = { kind: "ungraded" };
      const message = err instanceof Error ? err.message : String(err);
      this.toast = `Could not save grade for "${word}": ${message}`;
      return { ok: false, error: message };
    }
  }

  get allGraded(): boolean {
    return this.targets.length > 0 && this.targets.every((t) => t.status.kind === "graded");
  }
}

/** Split the story into segments using the service-provided spans only. */
export function segmentStory(
  story: string,
  spans: Record<string, [number, number][]>,
): StorySegment[] {
  const marks: { start: number; end: number; word: string }[] = [];
  for (const [word, ranges] of Object.entries(spans)) {
    for (const [start, end] of ranges) {
      marks.push({ start, end, word });
    }
  }
  marks.sort((a, b) => a.start - b.start);
  const segments: StorySegment[] = [];
  let cursor = 0;
  for (const mark of marks) {
    if (mark.start < cursor) {
      continue; // overlapping spans: keep the earlier one
    }
    if (mark.start > cursor) {
      segments.push({ text: story.slice(cursor, mark.start), highlight: null });
    }
    segments.push({ text: story.slice(mark.start, mark.end), highlight: mark.word });
    cursor = mark.end;
  }
  if (cursor < story.length) {
    segments.push({ text: story.slice(cursor), highlight: null });
  }
  return segments;
}
