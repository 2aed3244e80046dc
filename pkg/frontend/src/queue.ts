export interface QueueStatus {
  inFlight: boolean;
  queued: number;
}

// At most one generate request runs at a time; later submissions wait
// their turn in FIFO order. A failed task must not wedge the queue.
export class RequestQueue {
  private readonly waiting: Array<() => Promise<void>> = [];
  private running = false;

  constructor(private readonly onStatus: (status: QueueStatus) => void = () => {}) {}

  get status(): QueueStatus {
    return { inFlight: this.running, queued: this.waiting.length };
  }

  submit(task: () => Promise<void>): void {
    this.waiting.push(task);
    this.notify();
    void this.pump();
  }

  private async pump(): Promise<void> {
    if (this.running) {
      return;
    }
    const task = this.waiting.shift();
    if (task === undefined) {
      return;
    }
    this.running = true;
    this.notify();
    try {
      await task();
    } catch (exc) {
      // tasks report their own failures; this only guards the pump
      console.error("queued task failed:", exc);
    } finally {
      this.running = false;
      this.notify();
      void this.pump();
    }
  }

  private notify(): void {
    this.onStatus(this.status);
  }
}
