/**
 * Serial job queue: one WebGL context, one job at a time.  Results stay
 * retrievable until the queue is disposed.
 */
import { HarnessJobT, JobResult } from "./types.js";
import { DriverCompileError } from "./runner.js";

export type JobOutcome =
  | { status: "pending" }
  | JobResult
  | { status: "error"; error: string; driverLog: string | null };

export interface JobExecutor {
  run(job: HarnessJobT): JobResult;
}

export class JobQueue {
  private results = new Map<string, JobOutcome>();
  private chain: Promise<void> = Promise.resolve();
  private counter = 0;

  constructor(private executor: JobExecutor) {}

  submit(job: HarnessJobT): string {
    this.counter += 1;
    const id = `job-${this.counter}`;
    this.results.set(id, { status: "pending" });
    this.chain = this.chain.then(() => {
      try {
        this.results.set(id, this.executor.run(job));
      } catch (err) {
        const driverLog = err instanceof DriverCompileError ? err.log : null;
        this.results.set(id, {
          status: "error",
          error: err instanceof Error ? err.message : String(err),
          driverLog,
        });
      }
    });
    return id;
  }

  result(id: string): JobOutcome | undefined {
    return this.results.get(id);
  }

  async drain(): Promise<void> {
    await this.chain;
  }
}
