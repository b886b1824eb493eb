/**
 * Gateway wire schemas.
 *
 * Envelopes are newline-delimited JSON {topic, stamp, payload}. Topics
 * starting with "_" are control verbs; everything else is a bus topic
 * whose payload must validate against its schema before send.
 */

import { z } from "zod";

export const PLAY_W = 0.6;
export const PLAY_H = 0.33;

export const CHILD_COLOURS = ["purple", "yellow"] as const;
export const TOUCH_SOURCES = ["child_purple", "child_yellow", "wizard", "robot_fake"] as const;
export const TOUCH_PHASES = ["down", "move", "up"] as const;
export const TOOLS = ["drag", "draw"] as const;
export const STAGES = ["greetings", "tutorial", "freeplay", "debriefing", "done"] as const;
export const AXES = ["task_engagement", "social_engagement", "social_attitude"] as const;

export const CONSTRUCTS: Record<(typeof AXES)[number], readonly string[]> = {
  task_engagement: ["goal_oriented", "aimless", "adult_seeking"],
  social_engagement: ["solitary", "onlooker", "parallel", "associative", "cooperative"],
  social_attitude: ["prosocial", "adversarial", "assertive", "passive", "frustrated"],
};

export type ChildColour = (typeof CHILD_COLOURS)[number];
export type Axis = (typeof AXES)[number];
export type Stage = (typeof STAGES)[number];

const finite = z.number().finite();

export const touchEventSchema = z.object({
  touch_id: z.number().int().nonnegative(),
  phase: z.enum(TOUCH_PHASES),
  x: finite,
  y: finite,
  source: z.enum(TOUCH_SOURCES),
  stamp: z.number().int(),
});

export const toolSelectSchema = z.object({
  source: z.enum(TOUCH_SOURCES),
  tool: z.enum(TOOLS),
  colour: z.number().int().min(0).max(7),
  stamp: z.number().int(),
});

export const itemStateSchema = z.object({
  item_id: z.string(),
  kind: z.enum(["animal", "character", "object"]),
  x: finite,
  y: finite,
  theta: finite,
  w: finite,
  h: finite,
  z: z.number().int(),
  snapshot: z.boolean(),
  stamp: z.number().int(),
});

export const strokeSchema = z.object({
  colour: z.number().int().min(0).max(7),
  width: finite,
  points: z.array(z.tuple([finite, finite, z.number().int()])),
  snapshot: z.boolean(),
  stamp: z.number().int(),
});

export const backgroundSchema = z.object({
  width: z.number().int().positive(),
  height: z.number().int().positive(),
  cells: z.string(), // base64 of one palette byte per cell
  stamp: z.number().int(),
});

export const wozCommandSchema = z.object({
  kind: z.enum(["move_item", "point_at", "gaze_at", "say"]),
  item_id: z.string(),
  x: finite,
  y: finite,
  text: z.string(),
  stamp: z.number().int(),
});

export const fiducialsSchema = z.object({
  pairs: z.array(z.tuple([finite, finite, finite, finite])).min(2),
  stamp: z.number().int(),
});

export const stageMsgSchema = z.object({
  session_id: z.string(),
  condition: z.enum(["child_child", "child_robot"]),
  stage: z.enum(STAGES),
  stamp: z.number().int(),
});

export const healthMsgSchema = z.object({
  modules: z.array(z.tuple([z.string(), z.boolean(), z.number().int(), z.number().int()])),
  stamp: z.number().int(),
});

export const annotationSchema = z
  .object({
    coder: z.string().min(1),
    child: z.enum(CHILD_COLOURS),
    axis: z.enum(AXES),
    value: z.string(),
    start: z.number().int().nonnegative(),
    end: z.number().int().nonnegative(),
    stamp: z.number().int(),
  })
  .refine((a) => a.start < a.end, { message: "start must precede end" })
  .refine((a) => CONSTRUCTS[a.axis].includes(a.value), {
    message: "value must belong to its axis",
  });

/** Outbound-validated bus topics. */
export const TOPIC_SCHEMAS: Record<string, z.ZodTypeAny> = {
  "game/touches": touchEventSchema,
  "game/tools": toolSelectSchema,
  "woz/command": wozCommandSchema,
  "robot/fiducials": fiducialsSchema,
  "annot/add": annotationSchema,
};

export interface Envelope {
  topic: string;
  stamp: number;
  payload: Record<string, unknown>;
}

export class SchemaError extends Error {}

/** Validate an outbound payload against its topic schema (control verbs pass). */
export function validateOutbound(topic: string, payload: Record<string, unknown>): void {
  if (topic.startsWith("_")) return;
  const schema = TOPIC_SCHEMAS[topic];
  if (!schema) {
    throw new SchemaError(`unknown outbound topic ${topic}`);
  }
  const result = schema.safeParse(payload);
  if (!result.success) {
    throw new SchemaError(`${topic}: ${result.error.issues[0]?.message ?? "invalid payload"}`);
  }
}

export function encodeEnvelope(env: Envelope): string {
  return JSON.stringify(env) + "\n";
}

export function decodeEnvelope(line: string): Envelope {
  const obj = JSON.parse(line);
  if (typeof obj !== "object" || obj === null || typeof obj.topic !== "string") {
    throw new SchemaError(`malformed envelope: ${line.slice(0, 80)}`);
  }
  return { topic: obj.topic, stamp: obj.stamp ?? 0, payload: obj.payload ?? {} };
}

export type ItemState = z.infer<typeof itemStateSchema>;
export type StrokeMsg = z.infer<typeof strokeSchema>;
export type BackgroundMsg = z.infer<typeof backgroundSchema>;
export type TouchEventMsg = z.infer<typeof touchEventSchema>;
export type StageMsg = z.infer<typeof stageMsgSchema>;
export type HealthMsg = z.infer<typeof healthMsgSchema>;
export type AnnotationMsg = z.infer<typeof annotationSchema>;
