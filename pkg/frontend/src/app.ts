/** Application shell: tabs, fetching, keyboard handling, toasts.
 *
 * All server state is refetchable; the only things kept client-side
 * are the current tab, page, focused row, analyst name, and the bearer
 * token in session storage.
 */

import { ApiClient, ApiError, OfflineError } from "./api.js";
import { dashboardView } from "./dashboard.js";
import {
  focusedItem,
  fromItems,
  moveFocus,
  putBack,
  takeOut,
  type QueueListState,
} from "./queue.js";
import type { QueueItem } from "./types.js";
import { emptyState, pager, queueRow } from "./view.js";

type Tab = "pending" | "skipped" | "dashboard";

const ANALYST_KEY = "crashqc.analyst";

class App {
  private readonly api = new ApiClient();
  private tab: Tab = "pending";
  private page = 1;
  private totalPages = 1;
  private list: QueueListState = { items: [], focusId: null };
  private busy = new Set<string>();

  private readonly view = document.getElementById("view") as HTMLElement;
  private readonly banner = document.getElementById("banner") as HTMLElement;
  private readonly toastBox = document.getElementById("toast") as HTMLElement;
  private readonly authDialog = document.getElementById("auth") as HTMLDialogElement;
  private readonly analystInput = document.getElementById("analyst") as HTMLInputElement;

  start(): void {
    this.analystInput.value = sessionStorage.getItem(ANALYST_KEY) ?? "";
    this.analystInput.addEventListener("change", () => {
      sessionStorage.setItem(ANALYST_KEY, this.analystInput.value.trim());
    });
    for (const btn of document.querySelectorAll<HTMLButtonElement>("nav [data-tab]")) {
      btn.addEventListener("click", () => this.switchTab(btn.dataset.tab as Tab));
    }
    document.getElementById("retry")?.addEventListener("click", () => this.refresh());
    (document.getElementById("auth-form") as HTMLFormElement).addEventListener(
      "submit",
      (ev) => {
        ev.preventDefault();
        const input = document.getElementById("token") as HTMLInputElement;
        this.api.setToken(input.value.trim());
        this.authDialog.close();
        this.refresh();
      },
    );
    document.addEventListener("keydown", (ev) => this.onKey(ev));
    this.view.addEventListener("click", (ev) => this.onClick(ev));
    void this.refresh();
  }

  private switchTab(tab: Tab): void {
    this.tab = tab;
    this.page = 1;
    for (const btn of document.querySelectorAll<HTMLButtonElement>("nav [data-tab]")) {
      btn.classList.toggle("active", btn.dataset.tab === tab);
    }
    void this.refresh();
  }

  private async refresh(): Promise<void> {
    try {
      if (this.tab === "dashboard") {
        const metrics = await this.api.metrics();
        this.view.innerHTML = dashboardView(metrics);
      } else {
        const page = await this.api.queue(this.tab, this.page);
        this.totalPages = page.total_pages;
        this.list = fromItems(page.items);
        this.renderList();
      }
      this.banner.hidden = true;
    } catch (err) {
      this.handleError(err, "loading failed");
    }
  }

  private renderList(): void {
    if (this.list.items.length === 0) {
      this.view.innerHTML = emptyState(this.tab);
      return;
    }
    const now = new Date();
    const rows = this.list.items
      .map((i) => queueRow(i, i.record_id === this.list.focusId, now))
      .join("\n");
    this.view.innerHTML = `<ul class="queue">${rows}</ul>${pager(this.page, this.totalPages)}`;
    this.view
      .querySelector<HTMLElement>(".row.focused")
      ?.scrollIntoView({ block: "nearest" });
  }

  private onClick(ev: MouseEvent): void {
    const target = ev.target as HTMLElement;
    const pageBtn = target.closest<HTMLButtonElement>("[data-page]");
    if (pageBtn && !pageBtn.disabled) {
      this.page = Number(pageBtn.dataset.page);
      void this.refresh();
      return;
    }
    const actBtn = target.closest<HTMLButtonElement>("[data-act]");
    if (actBtn) {
      void this.adjudicate(actBtn.dataset.id as string, actBtn.dataset.act as string);
      return;
    }
    const row = target.closest<HTMLElement>(".row");
    if (row) {
      this.list = { ...this.list, focusId: row.dataset.id ?? null };
      this.renderList();
    }
  }

  private onKey(ev: KeyboardEvent): void {
    const target = ev.target as HTMLElement;
    if (target.closest("input, textarea, select, dialog")) return;
    if (this.tab === "dashboard") return;
    const key = ev.key.toLowerCase();
    if (key === "arrowdown" || key === "j") {
      this.list = moveFocus(this.list, 1);
      this.renderList();
      ev.preventDefault();
    } else if (key === "arrowup" || key === "k") {
      this.list = moveFocus(this.list, -1);
      this.renderList();
      ev.preventDefault();
    } else if (key === "y" || key === "n" || key === "s") {
      const item = focusedItem(this.list);
      if (item) {
        const act = key === "y" ? "yes" : key === "n" ? "no" : "skip";
        void this.adjudicate(item.record_id, act);
        ev.preventDefault();
      }
    }
  }

  private noteFor(recordId: string): string | null {
    const sel = `.row[data-id="${CSS.escape(recordId)}"] .note`;
    const note = this.view.querySelector<HTMLInputElement>(sel)?.value.trim();
    return note ? note : null;
  }

  private async adjudicate(recordId: string, act: string): Promise<void> {
    if (this.busy.has(recordId)) return;
    const analyst = this.analystInput.value.trim();
    if (act !== "skip" && !analyst) {
      this.toast("enter your analyst name first");
      this.analystInput.focus();
      return;
    }
    const note = this.noteFor(recordId);
    const before = this.list;
    const { state, removed } = takeOut(this.list, recordId);
    if (!removed) return;
    this.list = state;
    this.renderList();
    this.busy.add(recordId);
    try {
      if (act === "skip") {
        await this.api.skip(recordId);
      } else {
        await this.api.resolve(recordId, {
          is_secondary: act === "yes",
          analyst,
          note,
        });
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // Someone else already adjudicated it: their answer stands.
        this.toast(`already handled elsewhere: ${err.detail}`);
        await this.refresh();
      } else {
        this.list = putBack(this.list, removed as QueueItem);
        this.renderList();
        this.handleError(err, "could not save");
      }
    } finally {
      this.busy.delete(recordId);
    }
  }

  private handleError(err: unknown, context: string): void {
    if (err instanceof OfflineError) {
      this.banner.hidden = false;
      return;
    }
    if (err instanceof ApiError && err.status === 401) {
      this.toast("authentication required");
      this.authDialog.showModal();
      return;
    }
    const detail = err instanceof ApiError ? err.detail : String(err);
    this.toast(`${context}: ${detail}`);
  }

  private toast(message: string): void {
    this.toastBox.textContent = message;
    this.toastBox.hidden = false;
    window.setTimeout(() => {
      this.toastBox.hidden = true;
    }, 4000);
  }
}

new App().start();
