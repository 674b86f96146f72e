//! Scenario directories and the synthetic city generator.

use std::path::Path;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::{ArrivalMode, Config};
use super::csvio::{load_demand, load_history, load_orders, write_demand, write_history, write_orders};
use crate::city::{Arrivals, City, Grid, Point, SimParams, TraceOrder, PERIODS};
use crate::episode::{stream_seed, Environment, OrderSource, Stream};
use crate::error::{Error, Result};
use crate::human::{build_fairness_benchmark, build_preference_profile, driver_supply, PreferenceProfile};

pub const SCENARIO_FILE: &str = "scenario.toml";
pub const DEMAND_FILE: &str = "demand.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const ORDERS_FILE: &str = "orders.csv";

/// Contents of `scenario.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioMeta {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub cell_km: f64,
    pub slot_seconds: u32,
    pub episode_slots: usize,
    pub speed_kmh: f64,
    pub pickup_radius_km: f64,
    pub max_wait_slots: usize,
    pub p_home: f64,
    pub n_drivers: usize,
    pub trip_length_km: f64,
    pub seed: u64,
    pub demand_file: String,
    pub history_file: String,
    pub orders_file: String,
    /// Driver placement weight per region.
    pub placement: Vec<f64>,
    /// Home region of every driver.
    pub home_regions: Vec<usize>,
}

/// A city, its demand, the driver roster with visit histories, and a sampled order trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub meta: ScenarioMeta,
    /// `intensity[region][period]`, expected orders per slot.
    pub intensity: Vec<Vec<f64>>,
    /// `history[driver][region]` visit counts.
    pub history: Vec<Vec<f64>>,
    pub orders: Vec<TraceOrder>,
}

impl Scenario {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.meta.grid_rows, self.meta.grid_cols, self.meta.cell_km)
    }

    pub fn sim_params(&self) -> SimParams {
        let m = &self.meta;
        SimParams {
            slot_seconds: m.slot_seconds,
            episode_slots: m.episode_slots,
            speed_kmh: m.speed_kmh,
            pickup_radius_km: m.pickup_radius_km,
            max_wait_slots: m.max_wait_slots,
            p_home: m.p_home,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.sim_params().validate()?;
        let m = &self.meta;
        if m.n_drivers == 0 || self.history.len() != m.n_drivers || m.home_regions.len() != m.n_drivers {
            return Err(Error::InvalidScenario(format!(
                "roster mismatch: n_drivers {}, {} histories, {} home regions",
                m.n_drivers,
                self.history.len(),
                m.home_regions.len()
            )));
        }
        if m.home_regions.iter().any(|&u| u >= grid.num_regions()) {
            return Err(Error::InvalidScenario("home region outside the grid".into()));
        }
        if self.intensity.len() != grid.num_regions() || self.intensity.iter().any(|r| r.len() != PERIODS) {
            return Err(Error::InvalidScenario("demand matrix does not match grid × 24 periods".into()));
        }
        Ok(())
    }

    /// Checks that scenario-shape keys set explicitly in `cfg` agree with the scenario.
    pub fn check_config(&self, cfg: &Config) -> Result<()> {
        let m = &self.meta;
        let checks: [(&str, bool); 11] = [
            ("grid_rows", cfg.grid_rows.is_none_or(|v| v == m.grid_rows)),
            ("grid_cols", cfg.grid_cols.is_none_or(|v| v == m.grid_cols)),
            ("n_drivers", cfg.n_drivers.is_none_or(|v| v == m.n_drivers)),
            ("cell_km", cfg.cell_km == m.cell_km),
            ("slot_seconds", cfg.slot_seconds == m.slot_seconds),
            ("episode_slots", cfg.episode_slots == m.episode_slots),
            ("speed_kmh", cfg.speed_kmh == m.speed_kmh),
            ("pickup_radius_km", cfg.pickup_radius_km == m.pickup_radius_km),
            ("max_wait_slots", cfg.max_wait_slots == m.max_wait_slots),
            ("p_home", cfg.p_home == m.p_home),
            ("trip_length_km", cfg.trip_length_km == m.trip_length_km),
        ];
        for (key, ok) in checks {
            if !ok && cfg.explicit.contains(key) {
                return Err(Error::InvalidConfig {
                    key: key.into(),
                    reason: "config value disagrees with the scenario".into(),
                });
            }
        }
        Ok(())
    }

    pub fn profiles(&self, cfg: &Config) -> Result<Vec<PreferenceProfile>> {
        let grid = self.grid()?;
        self.history
            .iter()
            .enumerate()
            .map(|(k, counts)| {
                build_preference_profile(k, counts, cfg.pref_threshold, cfg.pref_kappa_km, &grid, cfg.neutral_quantifier)
            })
            .collect()
    }

    /// Assembles the runtime environment: city, profiles, benchmark and order source.
    pub fn environment(&self, cfg: &Config) -> Result<Environment> {
        self.validate()?;
        self.check_config(cfg)?;
        let grid = self.grid()?;
        let n = grid.num_regions();
        let city = City::new(grid, self.intensity.clone(), self.meta.placement.clone(), self.meta.trip_length_km)?;
        let profiles = self.profiles(cfg)?;
        let slots_per_period = 3600.0 / f64::from(self.meta.slot_seconds);
        let n_passenger: Vec<[f64; PERIODS]> = self
            .intensity
            .iter()
            .map(|row| std::array::from_fn(|v| row[v] * slots_per_period))
            .collect();
        let benchmark =
            build_fairness_benchmark(&n_passenger, &driver_supply(&profiles, n), &vec![cfg.beta; n], cfg.base_wait_seconds)?;
        let source = match cfg.arrivals {
            ArrivalMode::Poisson => OrderSource::Poisson,
            ArrivalMode::Trace => OrderSource::Trace(Arc::new(self.orders.clone())),
        };
        Environment::new(city, self.sim_params(), profiles, benchmark, cfg.alpha, source)
    }

    /// Writes `scenario.toml`, `demand.csv`, `history.csv` and `orders.csv` into `dir`, returning
    /// the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta_path = dir.join(SCENARIO_FILE);
        let text = toml::to_string(&self.meta)
            .map_err(|e| Error::InvalidScenario(format!("cannot serialize scenario: {e}")))?;
        std::fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))?;
        let demand = dir.join(&self.meta.demand_file);
        write_demand(&demand, &self.intensity)?;
        let history = dir.join(&self.meta.history_file);
        write_history(&history, &self.history)?;
        let orders = dir.join(&self.meta.orders_file);
        write_orders(&orders, &self.orders)?;
        Ok(vec![meta_path, demand, history, orders])
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let meta_path = dir.join(SCENARIO_FILE);
        let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: ScenarioMeta =
            toml::from_str(&text).map_err(|e| Error::data(&meta_path, 0, e.message().to_string()))?;
        let n = meta.grid_rows * meta.grid_cols;
        let intensity = load_demand(&dir.join(&meta.demand_file), n)?;
        let mut history = load_history(&dir.join(&meta.history_file), n)?;
        // drivers whose trailing ids have no visits would be lost in the sparse file
        if history.len() < meta.n_drivers {
            return Err(Error::InvalidScenario(format!(
                "history covers {} drivers, scenario declares {}",
                history.len(),
                meta.n_drivers
            )));
        }
        history.truncate(meta.n_drivers);
        let orders = load_orders(&dir.join(&meta.orders_file), n)?;
        let scenario = Scenario { meta, intensity, history, orders };
        scenario.validate()?;
        Ok(scenario)
    }
}

fn dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map_or(0.0, |g| g.sample(rng)))
        .collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 && total.is_finite() {
        draws.into_iter().map(|x| x / total).collect()
    } else {
        Vec::new()
    }
}

/// Synthetic city: uniform base demand with `hotspot_count` regions boosted by
/// `hotspot_multiplier` in rush periods, a time-of-day profile, centre-heavy driver homes, and
/// per-driver visit histories whose spread is set by a Dirichlet concentration.
pub fn generate_scenario(cfg: &Config, seed: u64) -> Result<Scenario> {
    let rows = Config::require(cfg.grid_rows, "grid_rows")?;
    let cols = Config::require(cfg.grid_cols, "grid_cols")?;
    let n_drivers = Config::require(cfg.n_drivers, "n_drivers")?;
    cfg.validate()?;
    let grid = Grid::new(rows, cols, cfg.cell_km)?;
    let n = grid.num_regions();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let regions: Vec<usize> = (0..n).collect();
    let hotspots: Vec<usize> = regions.choose_multiple(&mut rng, cfg.hotspot_count.min(n)).copied().collect();
    let time_of_day = |v: usize| {
        let h = v as f64 + 0.5;
        let day = if (9..=17).contains(&v) { 0.5 } else { 0.0 };
        0.25 + (-(h - 8.5f64).powi(2) / 6.0).exp() + (-(h - 18.0f64).powi(2) / 6.0).exp() + day
    };
    let mut raw: Vec<Vec<f64>> = (0..n)
        .map(|u| {
            (0..PERIODS)
                .map(|v| {
                    let boost = hotspots.contains(&u) && cfg.rush_periods.contains(&v);
                    time_of_day(v) * if boost { cfg.hotspot_multiplier } else { 1.0 }
                })
                .collect()
        })
        .collect();
    let slots_per_period = 3600.0 / f64::from(cfg.slot_seconds);
    let daily: f64 = raw.iter().flatten().sum::<f64>() * slots_per_period;
    let scale = if daily > 0.0 { cfg.orders_per_day / daily } else { 0.0 };
    for x in raw.iter_mut().flatten() {
        *x *= scale;
    }

    let middle = Point::new(grid.width_km() / 2.0, grid.height_km() / 2.0);
    let home_weights: Vec<f64> =
        (0..n).map(|u| (-grid.center(u).distance(middle) / cfg.home_spread_km).exp()).collect();
    let home_sampler = WeightedIndex::new(&home_weights).map_err(|e| Error::InvalidScenario(e.to_string()))?;
    let mut homes = Vec::with_capacity(n_drivers);
    let mut history = Vec::with_capacity(n_drivers);
    for _ in 0..n_drivers {
        let home = home_sampler.sample(&mut rng);
        let z: f64 = StandardNormal.sample(&mut rng);
        let concentration = cfg.preference_concentration * (cfg.preference_spread * z).exp();
        let kernel: Vec<f64> = (0..n).map(|u| (-grid.region_distance(u, home) / cfg.home_range_km).exp()).collect();
        let kernel_sum: f64 = kernel.iter().sum();
        let alpha: Vec<f64> = kernel.iter().map(|k| concentration * n as f64 * k / kernel_sum).collect();
        let mut p = dirichlet(&alpha, &mut rng);
        if p.is_empty() {
            p = (0..n).map(|u| if u == home { 1.0 } else { 0.0 }).collect();
        }
        let visit = WeightedIndex::new(&p).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        let mut counts = vec![0.0; n];
        for _ in 0..cfg.history_visits {
            counts[visit.sample(&mut rng)] += 1.0;
        }
        homes.push(home);
        history.push(counts);
    }
    let mut placement = vec![0.1; n];
    for &h in &homes {
        placement[h] += 1.0;
    }

    let city = City::new(grid, raw.clone(), placement.clone(), cfg.trip_length_km)?;
    let mut arrivals = Arrivals::poisson(&city, stream_seed(seed, Stream::Arrivals));
    let mut orders = Vec::new();
    for slot in 0..cfg.episode_slots {
        orders.extend(arrivals.sample(&city, slot, cfg.slot_seconds));
    }

    let scenario = Scenario {
        meta: ScenarioMeta {
            grid_rows: rows,
            grid_cols: cols,
            cell_km: cfg.cell_km,
            slot_seconds: cfg.slot_seconds,
            episode_slots: cfg.episode_slots,
            speed_kmh: cfg.speed_kmh,
            pickup_radius_km: cfg.pickup_radius_km,
            max_wait_slots: cfg.max_wait_slots,
            p_home: cfg.p_home,
            n_drivers,
            trip_length_km: cfg.trip_length_km,
            seed,
            demand_file: DEMAND_FILE.into(),
            history_file: HISTORY_FILE.into(),
            orders_file: ORDERS_FILE.into(),
            placement,
            home_regions: homes,
        },
        intensity: raw,
        history,
        orders,
    };
    scenario.validate()?;
    Ok(scenario)
}
