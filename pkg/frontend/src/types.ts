/**
 * Mirrors of the service response bodies. The dashboard never invents fields
 * beyond these and never recomputes aggregations client-side.
 */

export interface EvaluatorDoc {
  kind: string;
  field?: string;
  [key: string]: unknown;
}

export interface MetricDef {
  id: string;
  name: string;
  description: string;
  data_source_id: string;
  evaluator: EvaluatorDoc;
}

export interface ChildRef {
  id: string;
  weight: number;
}

export interface ParentDef {
  id: string;
  name: string;
  children: ChildRef[];
}

export interface QualityModel {
  model_id: string;
  version: string;
  metrics: MetricDef[];
  factors: ParentDef[];
  indicators: ParentDef[];
}

export interface AssessmentPoint {
  element_id: string;
  layer: "metric" | "factor" | "indicator";
  timestamp: string;
  value: number;
  provenance: "observed" | "whatif" | "forecast";
}

export interface Alert {
  alert_id: string;
  element_id: string;
  observed_value: number;
  trigger_below: number;
  severity: "warning" | "critical";
  raised_at: string;
  state: "open" | "acknowledged" | "resolved";
}

export interface QualityRequirement {
  qr_id: string;
  text: string;
  created_at: string;
  pattern_name: string | null;
  source_alert_id: string | null;
  linked_metric_ids: string[];
  state: string;
  decisions: string[];
  backlog_ref: string | null;
  derived_task_ids: string[];
  task_statuses: Record<string, string>;
}

export interface DecisionEvent {
  event_id: string;
  kind: string;
  subject_id: string;
  timestamp: string;
  rationale: string;
}

export interface HistorySeries {
  element_id: string;
  points: AssessmentPoint[];
}

export interface QflBody {
  metrics: {
    qe_acceptance: number;
    pm_acceptance: number;
    end_to_end: number;
    mitigation_task_completion: number;
    qr_derivation: number;
  };
  rollup: Record<string, number>;
}

export interface ApiErrorBody {
  status: number;
  code: string;
  message: string;
  details: Record<string, unknown>;
}

export type DecisionStage = "qe" | "pm";
export type Decision = "accept" | "reject" | "postpone";
