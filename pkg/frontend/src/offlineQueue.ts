/** FIFO queue of verdicts that failed to send, flushed on reconnect.
 *
 * The server assigns decision timestamps, so flushing in submission order
 * preserves journal order. Queue contents survive a page reload via
 * storage; everything else is refetched from the service.
 */

import type { DecisionBody } from "./types.js";

export interface QueueStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

const STORAGE_KEY = "stormwatch.pendingDecisions";

export class OfflineQueue {
  private items: DecisionBody[] = [];

  constructor(private readonly storage?: QueueStorage) {
    const raw = storage?.getItem(STORAGE_KEY);
    if (raw) {
      try {
        this.items = JSON.parse(raw) as DecisionBody[];
      } catch {
        this.items = [];
      }
    }
  }

  get size(): number {
    return this.items.length;
  }

  peekAll(): readonly DecisionBody[] {
    return this.items;
  }

  push(decision: DecisionBody): void {
    this.items.push(decision);
    this.persist();
  }

  /**
   * Send queued decisions oldest-first. Duplicate rejections count as
   * delivered (the server already has a verdict); a network failure stops
   * the flush and keeps the remainder queued. Returns delivered count.
   */
  async flush(
    send: (d: DecisionBody) => Promise<void>,
    isDuplicate: (err: unknown) => boolean,
  ): Promise<number> {
    let delivered = 0;
    while (this.items.length > 0) {
      const head = this.items[0]!;
      try {
        await send(head);
      } catch (err) {
        if (!isDuplicate(err)) {
          this.persist();
          return delivered;
        }
      }
      this.items.shift();
      delivered += 1;
    }
    this.persist();
    return delivered;
  }

  private persist(): void {
    this.storage?.setItem(STORAGE_KEY, JSON.stringify(this.items));
  }
}
