/** Deck dashboard view-model: stat tiles plus the recent-session list. */

import { ApiClient, ApiError, DeckStats } from "./api.js";

export type DashboardState =
  | { kind: "loading" }
  | { kind: "not-found" }
  | { kind: "error"; message: string }
  | { kind: "ready"; stats: DeckStats };

export class DashboardViewModel {
  state: DashboardState = { kind: "loading" };

  constructor(
    private readonly api: ApiClient,
    readonly deckId: string,
  ) {}

  async refresh(): Promise<void> {
    this.state = { kind: "loading" };
    try {
      const stats = await this.api.deckStats(this.deckId);
      this.state = { kind: "ready", stats };
    } catch (err) {
      if (err instanceof ApiError && err.notFound) {
        this.state = { kind: "not-found" };
      } else {
        this.state = { kind: "error", message: err instanceof Error ? err.message : String(err) };
      }
    }
  }

  get tiles(): { label: string; value: number }[] {
    if (this.state.kind !== "ready") {
      return [];
    }
    const s = this.state.stats;
    return [
      { label: "Due today", value: s.due_today },
      { label: "New available", value: s.new_available },
      { label: "Total learned", value: s.total_learned },
    ];
  }
}
