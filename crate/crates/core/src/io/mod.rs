//! Scenario generation, CSV ingestion, run configuration and result export.

mod config;
mod csvio;
mod export;
mod scenario;

pub use config::{env_overrides, parse_override, ArrivalMode, Config, ENV_PREFIX};
pub use csvio::{
    load_demand, load_history, load_orders, write_benchmark, write_demand, write_history, write_orders,
    BENCHMARK_HEADER, DEMAND_HEADER, HISTORY_HEADER, ORDERS_HEADER,
};
pub use export::{
    export_results, read_jsonl, read_region_waits, render_ratio_table, write_jsonl, write_ratio_table,
    write_region_waits, REGION_WAITS_HEADER, RATIO_HEADER,
};
pub use scenario::{generate_scenario, Scenario, ScenarioMeta, DEMAND_FILE, HISTORY_FILE, ORDERS_FILE, SCENARIO_FILE};
