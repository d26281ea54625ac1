/** Browser entry point: wires the view-models to a minimal DOM shell.
 *
 * URL shape: #/deck/<id> for the dashboard, #/deck/<id>/study for a session.
 */

import { ApiClient, GRADES } from "./api.js";
import { DashboardViewModel } from "./dashboard.js";
import { StudyViewModel } from "./studyView.js";

const api = new ApiClient("");

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function renderStudy(root: HTMLElement, vm: StudyViewModel): void {
  root.replaceChildren();
  if (vm.state.kind === "loading") {
    root.append(el("p", "loading", "Preparing today's story…"));
    return;
  }
  if (vm.state.kind === "error") {
    const banner = el("div", "banner error", vm.state.message);
    if (vm.state.retryable) {
      const retry = el("button", "retry", "Retry");
      retry.addEventListener("click", () => {
        void vm.fetchToday().then(() => renderStudy(root, vm));
      });
      banner.append(retry);
    }
    root.append(banner);
    return;
  }

  const storyNode = el("article", "story");
  for (const segment of vm.segments) {
    if (segment.highlight) {
      const mark = el("mark", "target", segment.text);
      mark.dataset.word = segment.highlight;
      storyNode.append(mark);
    } else {
      storyNode.append(document.createTextNode(segment.text));
    }
  }
  root.append(storyNode);

  const chips = el("ul", "targets");
  for (const chip of vm.targets) {
    const item = el("li", `chip ${chip.status.kind}`);
    item.append(el("span", "word", chip.word));
    item.append(el("span", "count", `×${chip.occurrenceCount}`));
    if (chip.notPresent) {
      item.append(el("span", "badge", "not present"));
    }
    for (const grade of GRADES) {
      const button = el("button", `grade ${grade}`, grade) as HTMLButtonElement;
      button.disabled = chip.status.kind !== "ungraded";
      button.addEventListener("click", () => {
        void vm.gradeWord(chip.word, grade).then(() => renderStudy(root, vm));
      });
      item.append(button);
    }
    chips.append(item);
  }
  root.append(chips);

  if (vm.toast) {
    root.append(el("div", "toast", vm.toast));
    vm.toast = null;
  }
}

function renderDashboard(root: HTMLElement, vm: DashboardViewModel): void {
  root.replaceChildren();
  if (vm.state.kind === "loading") {
    root.append(el("p", "loading", "Loading deck…"));
    return;
  }
  if (vm.state.kind === "not-found") {
    root.append(el("h1", "not-found", "Deck not found"));
    return;
  }
  if (vm.state.kind === "error") {
    root.append(el("div", "banner error", vm.state.message));
    return;
  }
  const tiles = el("div", "tiles");
  for (const tile of vm.tiles) {
    const node = el("div", "tile");
    node.append(el("div", "value", String(tile.value)));
    node.append(el("div", "label", tile.label));
    tiles.append(node);
  }
  root.append(tiles);

  const list = el("ul", "recent");
  for (const session of vm.state.stats.recent_sessions) {
    list.append(el("li", "session",
      `${session.session_id}: ${[...session.new_words, ...session.review_words].join(", ")}`));
  }
  root.append(list);
}

async function route(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  const match = /^#\/deck\/([^/]+)(\/study)?$/.exec(window.location.hash);
  if (!match) {
    root.replaceChildren(el("h1", "not-found", "Pick a deck: #/deck/<id>"));
    return;
  }
  const [, deckId, study] = match;
  if (study) {
    const vm = new StudyViewModel(api, deckId);
    await vm.fetchToday();
    renderStudy(root, vm);
  } else {
    const vm = new DashboardViewModel(api, deckId);
    await vm.refresh();
    renderDashboard(root, vm);
  }
}

window.addEventListener("hashchange", () => void route());
void route();
