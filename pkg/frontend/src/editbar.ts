import type { InterpolationJson } from "./types";

export interface EditBarHandlers {
  onSelectAuthored: (workingIndex: number) => void;
  onAddAt: (slot: number) => void;
  onRemoveAuthored: (workingIndex: number) => void;
  onScrub: (position: number) => void;
}

/**
 * The timeline strip below the viewer: authored waypoints are colored
 * dots (red closed, green open, yellow holding), interpolated ones are
 * gray. Hovering a gray dot offers "+" to author it; hovering an
 * authored dot offers "-" to remove it. Moving the cursor across the
 * bar scrubs the playback position.
 */
export class EditBar {
  private root: HTMLElement;

  constructor(root: HTMLElement, private handlers: EditBarHandlers) {
    this.root = root;
    this.root.classList.add("editbar");
    this.root.addEventListener("mousemove", (event) => {
      const rect = this.root.getBoundingClientRect();
      const position = (event.clientX - rect.left) / Math.max(rect.width, 1);
      this.handlers.onScrub(Math.min(Math.max(position, 0), 1));
    });
  }

  render(preview: InterpolationJson | null, selectedWorking: number | null): void {
    this.root.textContent = "";
    if (!preview) return;
    const authored = preview.authored_indices;
    preview.waypoints.forEach((wp, slot) => {
      const dot = document.createElement("span");
      const authoredPos = authored.indexOf(slot);
      if (authoredPos >= 0) {
        dot.className = `dot authored gripper-${wp.g}`;
        if (authoredPos === selectedWorking) dot.classList.add("selected");
        dot.title = `waypoint ${authoredPos} (${wp.g}); click to select, right-click to remove`;
        dot.addEventListener("click", () => this.handlers.onSelectAuthored(authoredPos));
        dot.addEventListener("contextmenu", (event) => {
          event.preventDefault();
          this.handlers.onRemoveAuthored(authoredPos);
        });
      } else {
        dot.className = "dot gray";
        dot.title = "interpolated; click + to author a waypoint here";
        const plus = document.createElement("button");
        plus.className = "add";
        plus.textContent = "+";
        plus.addEventListener("click", (event) => {
          event.stopPropagation();
          this.handlers.onAddAt(slot);
        });
        dot.appendChild(plus);
      }
      this.root.appendChild(dot);
    });
  }
}
