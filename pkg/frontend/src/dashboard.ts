/**
 * Experimenter dashboard: protocol stage control, demographics form,
 * module health table and node restarts. Illegal transitions come back
 * from the server and surface inline, never applied locally.
 */

import { GatewayClient, GatewayError } from "./client.js";
import { HealthMsg, Stage, StageMsg, healthMsgSchema, stageMsgSchema } from "./envelopes.js";

export interface HealthRow {
  name: string;
  running: boolean;
  ageUs: number;
  epoch: number;
}

export class Dashboard {
  stage: Stage | null = null;
  sessionId: string | null = null;
  condition: string | null = null;
  health: HealthRow[] = [];
  inlineError: string | null = null;

  constructor(private client: GatewayClient) {
    client.onTopic("session/stage", (env) => this.applyStage(stageMsgSchema.parse(env.payload)));
    client.onTopic("session/health", (env) => this.applyHealth(healthMsgSchema.parse(env.payload)));
  }

  applyStage(msg: StageMsg): void {
    this.stage = msg.stage;
    this.sessionId = msg.session_id;
    this.condition = msg.condition;
  }

  applyHealth(msg: HealthMsg): void {
    this.health = msg.modules.map(([name, running, ageUs, epoch]) => ({
      name,
      running,
      ageUs,
      epoch,
    }));
  }

  async newSession(condition: "child_child" | "child_robot"): Promise<boolean> {
    return this.run("_new_session", { condition });
  }

  async advance(to: Stage): Promise<boolean> {
    return this.run("_advance", { to });
  }

  async submitDemographics(entries: Array<[string, number] | [string, number, string]>) {
    return this.run("_demographics", { entries });
  }

  async restart(module: string): Promise<boolean> {
    return this.run("_restart", { module });
  }

  private async run(verb: string, payload: Record<string, unknown>): Promise<boolean> {
    this.inlineError = null;
    try {
      const reply = await this.client.call(verb, payload);
      // stage ack reflects immediately; the streamed event confirms it
      const stage = (reply.payload as { stage?: Stage }).stage;
      if (stage) this.stage = stage;
      return true;
    } catch (err) {
      if (err instanceof GatewayError) {
        this.inlineError = `${err.code}: ${err.detail}`;
        return false;
      }
      throw err;
    }
  }
}
