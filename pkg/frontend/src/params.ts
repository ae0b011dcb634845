/** Run parameters in the service's wire format, with engine defaults. */
export interface RunParams {
  epsilon: number;
  lambda: number;
  gForm: "rational" | "inverse_sqrt";
  sigma: number | null;
  tau: number | null;
  omega: number;
  tol: number;
  maxSweeps: number;
  finalTime: number | null;
  stepCount: number | null;
  steadyTol: number;
  delta: number | null;
  bigM: number;
  initCircle: [number, number, number] | null;
}

export function defaultParams(): RunParams {
  return {
    epsilon: 1e-4,
    lambda: 100.0,
    gForm: "inverse_sqrt",
    sigma: null,
    tau: null,
    omega: 1.2,
    tol: 1e-9,
    maxSweeps: 2000,
    finalTime: null,
    stepCount: null,
    steadyTol: 1e-6,
    delta: null,
    bigM: 1e6,
    initCircle: null,
  };
}

/** Client-side mirror of the service's 422 rules; returns problems found. */
export function validateParams(p: RunParams): string[] {
  const errors: string[] = [];
  const positive: [string, number | null][] = [
    ["epsilon", p.epsilon],
    ["lambda", p.lambda],
    ["sigma", p.sigma],
    ["tau", p.tau],
    ["tol", p.tol],
    ["finalTime", p.finalTime],
    ["steadyTol", p.steadyTol],
    ["delta", p.delta],
    ["bigM", p.bigM],
  ];
  for (const [name, value] of positive) {
    if (value !== null && !(value > 0)) errors.push(`${name} must be positive`);
  }
  if (!(p.omega > 0 && p.omega < 2)) errors.push("omega must lie in (0, 2)");
  if (!(Number.isInteger(p.maxSweeps) && p.maxSweeps >= 1)) {
    errors.push("maxSweeps must be a positive integer");
  }
  if (p.stepCount !== null && !(Number.isInteger(p.stepCount) && p.stepCount >= 1)) {
    errors.push("stepCount must be a positive integer");
  }
  if (p.gForm !== "rational" && p.gForm !== "inverse_sqrt") {
    errors.push("gForm must be rational or inverse_sqrt");
  }
  if (p.initCircle !== null && !(p.initCircle[2] > 0)) {
    errors.push("initCircle radius must be positive");
  }
  return errors;
}

/** Strip nulls so the wire payload only carries explicit values. */
export function toWire(p: RunParams): Record<string, unknown> {
  const wire: Record<string, unknown> = {};
  for (const [key, value] of Object.entries(p)) {
    if (value !== null) wire[key] = value;
  }
  return wire;
}
