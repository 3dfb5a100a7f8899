//! Virtual time and daily task schedules.
//!
//! A day is twelve iterations of two hours. POI activity periods are sets of
//! those iteration slots (0..12).

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::agents::{IndividualAgent, PoiAgent, SeihrdState};

pub const ITERATIONS_PER_DAY: u64 = 12;
pub const HOURS_PER_ITERATION: f64 = 2.0;
pub const SLOTS_PER_DAY: usize = ITERATIONS_PER_DAY as usize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScheduleError {
    #[error("activity slot {0} out of range 0..{SLOTS_PER_DAY}")]
    SlotOutOfRange(i64),
    #[error("activity slot list is empty")]
    EmptySlots,
    #[error("cannot parse {0:?} as an activity slot list")]
    BadSlotList(String),
    #[error("unknown task kind {0:?} (known: work, school, hospital_visit, service_visit, return_home)")]
    UnknownTaskKind(String),
    #[error("bad task template {0:?}: expected <kind>,<start>,<end>")]
    BadTask(String),
    #[error("profession template invalid: {0}")]
    Template(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationClock {
    iteration: u64,
    day: u64,
    clock_hours: f64,
}

impl Default for SimulationClock {
    fn default() -> Self {
        Self::new()
    }
}

impl SimulationClock {
    pub fn new() -> Self {
        Self::at(0)
    }

    pub fn at(iteration: u64) -> Self {
        Self {
            iteration,
            day: 1 + iteration / ITERATIONS_PER_DAY,
            clock_hours: (iteration % ITERATIONS_PER_DAY) as f64 * HOURS_PER_ITERATION,
        }
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn day(&self) -> u64 {
        self.day
    }

    pub fn clock_hours(&self) -> f64 {
        self.clock_hours
    }

    pub fn iterations_per_day(&self) -> u64 {
        ITERATIONS_PER_DAY
    }

    pub fn hours_per_iteration(&self) -> f64 {
        HOURS_PER_ITERATION
    }

    /// Index of the current slot within the day.
    pub fn slot(&self) -> usize {
        (self.iteration % ITERATIONS_PER_DAY) as usize
    }

    /// Moves to the next iteration. Returns `true` on day rollover, when the
    /// clock resets to zero and the day counter increments.
    pub fn advance(&mut self) -> bool {
        self.iteration += 1;
        if self.iteration % ITERATIONS_PER_DAY == 0 {
            self.day += 1;
            self.clock_hours = 0.0;
            true
        } else {
            self.clock_hours += HOURS_PER_ITERATION;
            false
        }
    }
}

/// Subset of the day's iteration slots, as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SlotSet(u16);

impl SlotSet {
    pub fn all() -> Self {
        Self((1 << SLOTS_PER_DAY) - 1)
    }

    pub fn from_slots(slots: impl IntoIterator<Item = usize>) -> Result<Self, ScheduleError> {
        let mut bits = 0u16;
        for s in slots {
            if s >= SLOTS_PER_DAY {
                return Err(ScheduleError::SlotOutOfRange(s as i64));
            }
            bits |= 1 << s;
        }
        Ok(Self(bits))
    }

    pub fn contains(&self, slot: usize) -> bool {
        slot < SLOTS_PER_DAY && self.0 & (1 << slot) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..SLOTS_PER_DAY).filter(|s| self.contains(*s))
    }
}

impl fmt::Display for SlotSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join(";"))
    }
}

impl FromStr for SlotSet {
    type Err = ScheduleError;

    /// Parses a `;`-separated list such as `4;5;6`. The empty set is rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut slots = Vec::new();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let v: i64 = part
                .parse()
                .map_err(|_| ScheduleError::BadSlotList(s.to_string()))?;
            if !(0..SLOTS_PER_DAY as i64).contains(&v) {
                return Err(ScheduleError::SlotOutOfRange(v));
            }
            slots.push(v as usize);
        }
        let set = Self::from_slots(slots)?;
        if set.is_empty() {
            return Err(ScheduleError::EmptySlots);
        }
        Ok(set)
    }
}

/// True when the clock's slot is one of the POI's activity slots.
pub fn poi_active(poi: &PoiAgent, clock: &SimulationClock) -> bool {
    poi.activity_slots.contains(clock.slot())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Work,
    School,
    HospitalVisit,
    ServiceVisit,
    ReturnHome,
}

impl TaskKind {
    /// Work, school, and hospital tasks go to the agent's assigned POI.
    pub fn is_professional(&self) -> bool {
        matches!(self, TaskKind::Work | TaskKind::School | TaskKind::HospitalVisit)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::Work => "work",
            TaskKind::School => "school",
            TaskKind::HospitalVisit => "hospital_visit",
            TaskKind::ServiceVisit => "service_visit",
            TaskKind::ReturnHome => "return_home",
        }
    }
}

impl FromStr for TaskKind {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "work" => TaskKind::Work,
            "school" => TaskKind::School,
            "hospital_visit" => TaskKind::HospitalVisit,
            "service_visit" => TaskKind::ServiceVisit,
            "return_home" => TaskKind::ReturnHome,
            other => return Err(ScheduleError::UnknownTaskKind(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskTarget {
    /// Slot of the agent's pre-assigned POI.
    Assigned(usize),
    /// Nearest eligible POI of a category; `None` means any service POI.
    NearestOfCategory(Option<String>),
    Home,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub kind: TaskKind,
    pub start_hours: f64,
    pub end_hours: f64,
    pub target: TaskTarget,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DailySchedule {
    pub tasks: Vec<Task>,
}

impl DailySchedule {
    /// The task covering `hours` (start inclusive, end exclusive).
    pub fn task_at(&self, hours: f64) -> Option<&Task> {
        self.tasks
            .iter()
            .find(|t| t.start_hours <= hours && hours < t.end_hours)
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Checks ordering, bounds, the single professional task, and the
    /// closing return-home task. Empty schedules are valid.
    pub fn is_well_formed(&self) -> bool {
        if self.tasks.is_empty() {
            return true;
        }
        let bounds_ok = self
            .tasks
            .iter()
            .all(|t| 0.0 <= t.start_hours && t.start_hours < t.end_hours && t.end_hours <= 24.0);
        let ordered = self
            .tasks
            .windows(2)
            .all(|w| w[0].end_hours <= w[1].start_hours);
        let professional = self.tasks.iter().filter(|t| t.kind.is_professional()).count();
        let targets_ok = self.tasks.iter().all(|t| match t.kind {
            k if k.is_professional() => matches!(t.target, TaskTarget::Assigned(_)),
            TaskKind::ServiceVisit => matches!(t.target, TaskTarget::NearestOfCategory(_)),
            _ => t.target == TaskTarget::Home,
        });
        let last_home = self.tasks.last().map(|t| t.kind) == Some(TaskKind::ReturnHome);
        bounds_ok && ordered && professional <= 1 && targets_ok && last_home
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateTask {
    pub kind: TaskKind,
    pub start_hours: f64,
    pub end_hours: f64,
}

impl FromStr for TemplateTask {
    type Err = ScheduleError;

    /// `<kind>,<start>,<end>`, e.g. `work,8,16`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [kind, start, end] = parts.as_slice() else {
            return Err(ScheduleError::BadTask(s.to_string()));
        };
        let num = |v: &str| v.parse::<f64>().map_err(|_| ScheduleError::BadTask(s.to_string()));
        Ok(Self {
            kind: kind.parse()?,
            start_hours: num(start)?,
            end_hours: num(end)?,
        })
    }
}

impl fmt::Display for TemplateTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.kind.as_str(), self.start_hours, self.end_hours)
    }
}

/// The fixed daily task list shared by every agent of one profession.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfessionTemplate {
    tasks: Vec<TemplateTask>,
}

pub const MAX_SERVICE_VISITS: usize = 2;

impl ProfessionTemplate {
    pub fn new(mut tasks: Vec<TemplateTask>) -> Result<Self, ScheduleError> {
        tasks.sort_by(|a, b| a.start_hours.total_cmp(&b.start_hours));
        let bad = |msg: String| Err(ScheduleError::Template(msg));
        for t in &tasks {
            if t.kind == TaskKind::ReturnHome {
                return bad("return_home is appended automatically".to_string());
            }
            if !(0.0 <= t.start_hours && t.start_hours < t.end_hours && t.end_hours < 24.0) {
                return bad(format!("task {t} must satisfy 0 <= start < end < 24"));
            }
        }
        if let Some(w) = tasks.windows(2).find(|w| w[0].end_hours > w[1].start_hours) {
            return bad(format!("tasks {} and {} overlap", w[0], w[1]));
        }
        if tasks.iter().filter(|t| t.kind.is_professional()).count() > 1 {
            return bad("at most one work, school, or hospital task per day".to_string());
        }
        let services = tasks.iter().filter(|t| t.kind == TaskKind::ServiceVisit).count();
        if services > MAX_SERVICE_VISITS {
            return bad(format!("{services} service visits, at most {MAX_SERVICE_VISITS} allowed"));
        }
        Ok(Self { tasks })
    }

    pub fn tasks(&self) -> &[TemplateTask] {
        &self.tasks
    }

    pub fn professional_kind(&self) -> Option<TaskKind> {
        self.tasks.iter().map(|t| t.kind).find(TaskKind::is_professional)
    }
}

/// Builds today's schedule from the profession template.
///
/// Kinds and hours come from the template; the only random part is the
/// category of each service visit. Dead and hospitalized agents get an
/// empty schedule, and agents without an assigned POI skip the
/// professional task.
pub fn generate_daily_schedule<R: Rng + ?Sized>(
    agent: &IndividualAgent,
    template: &ProfessionTemplate,
    service_categories: &[String],
    rng: &mut R,
) -> DailySchedule {
    if matches!(agent.state, SeihrdState::D | SeihrdState::H) {
        return DailySchedule::default();
    }
    let mut tasks = Vec::with_capacity(template.tasks.len() + 1);
    for t in &template.tasks {
        let target = if t.kind.is_professional() {
            match agent.assigned_poi {
                Some(slot) => TaskTarget::Assigned(slot),
                None => continue,
            }
        } else {
            let category = match service_categories.len() {
                0 => None,
                n => Some(service_categories[rng.random_range(0..n)].clone()),
            };
            TaskTarget::NearestOfCategory(category)
        };
        tasks.push(Task {
            kind: t.kind,
            start_hours: t.start_hours,
            end_hours: t.end_hours,
            target,
        });
    }
    let home_from = template.tasks.last().map_or(0.0, |t| t.end_hours);
    tasks.push(Task {
        kind: TaskKind::ReturnHome,
        start_hours: home_from,
        end_hours: 24.0,
        target: TaskTarget::Home,
    });
    DailySchedule { tasks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::test_support::agent;
    use crate::agents::Profession;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn worker_template() -> ProfessionTemplate {
        ProfessionTemplate::new(vec![
            "work,8,16".parse().unwrap(),
            "service_visit,16,18".parse().unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn advance_examples() {
        let mut clock = SimulationClock::new();
        assert!(!clock.advance());
        assert_eq!((clock.iteration(), clock.clock_hours(), clock.day()), (1, 2.0, 1));

        let mut clock = SimulationClock::at(11);
        assert_eq!(clock.day(), 1);
        assert!(clock.advance());
        assert_eq!((clock.iteration(), clock.clock_hours(), clock.day()), (12, 0.0, 2));

        let mut clock = SimulationClock::new();
        let rollovers = (0..360).filter(|_| clock.advance()).count();
        assert_eq!(clock.day(), 31);
        assert_eq!(rollovers, 30);
    }

    #[test]
    fn clock_matches_closed_form() {
        let mut clock = SimulationClock::new();
        for n in 0..=10_000u64 {
            assert_eq!(clock.clock_hours(), (n % 12) as f64 * 2.0);
            assert_eq!(clock.day(), 1 + n / 12);
            assert_eq!(clock, SimulationClock::at(n));
            let rolled = clock.advance();
            assert_eq!(rolled, (n + 1) % 12 == 0);
        }
    }

    #[test]
    fn slot_set_parsing() {
        let s: SlotSet = "4;5;6".parse().unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![4, 5, 6]);
        assert_eq!(s.to_string(), "4;5;6");
        assert_eq!("12".parse::<SlotSet>(), Err(ScheduleError::SlotOutOfRange(12)));
        assert_eq!("".parse::<SlotSet>(), Err(ScheduleError::EmptySlots));
        assert!("a;b".parse::<SlotSet>().is_err());
        assert_eq!(SlotSet::all().len(), 12);
    }

    #[test]
    fn activity_window() {
        let mut poi = crate::agents::test_support::poi("p", 0.0, 0.0);
        poi.activity_slots = "4;5;6".parse().unwrap();
        assert!(poi_active(&poi, &SimulationClock::at(16)));
        assert!(!poi_active(&poi, &SimulationClock::at(0)));
        poi.activity_slots = SlotSet::all();
        assert!((0..48).all(|n| poi_active(&poi, &SimulationClock::at(n))));
    }

    #[test]
    fn worker_schedule_follows_template() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a = agent(0, Profession::Worker);
        a.assigned_poi = Some(7);
        let cats = vec!["grocery".to_string()];
        let s = generate_daily_schedule(&a, &worker_template(), &cats, &mut rng);
        let expect = vec![
            Task { kind: TaskKind::Work, start_hours: 8.0, end_hours: 16.0, target: TaskTarget::Assigned(7) },
            Task {
                kind: TaskKind::ServiceVisit,
                start_hours: 16.0,
                end_hours: 18.0,
                target: TaskTarget::NearestOfCategory(Some("grocery".to_string())),
            },
            Task { kind: TaskKind::ReturnHome, start_hours: 18.0, end_hours: 24.0, target: TaskTarget::Home },
        ];
        assert_eq!(s.tasks, expect);
        assert!(s.is_well_formed());
        assert_eq!(s.task_at(10.0).unwrap().kind, TaskKind::Work);
        assert!(s.task_at(6.0).is_none());
    }

    #[test]
    fn dead_and_hospitalized_get_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for state in [SeihrdState::D, SeihrdState::H] {
            let mut a = agent(0, Profession::Worker);
            a.state = state;
            assert!(generate_daily_schedule(&a, &worker_template(), &[], &mut rng).is_empty());
        }
    }

    #[test]
    fn same_profession_same_kinds_and_hours() {
        let cats: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut a = agent(0, Profession::Worker);
        let mut b = agent(1, Profession::Worker);
        a.assigned_poi = Some(1);
        b.assigned_poi = Some(2);
        for _ in 0..100 {
            let sa = generate_daily_schedule(&a, &worker_template(), &cats, &mut rng);
            let sb = generate_daily_schedule(&b, &worker_template(), &cats, &mut rng);
            let shape = |s: &DailySchedule| -> Vec<_> {
                s.tasks.iter().map(|t| (t.kind, t.start_hours, t.end_hours)).collect()
            };
            assert_eq!(shape(&sa), shape(&sb));
        }
        // same stream position gives the identical schedule
        let s1 = generate_daily_schedule(&a, &worker_template(), &cats, &mut ChaCha8Rng::seed_from_u64(5));
        let s2 = generate_daily_schedule(&a, &worker_template(), &cats, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(s1, s2);
    }

    #[test]
    fn unassigned_agent_skips_professional_task() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = agent(0, Profession::Worker);
        let s = generate_daily_schedule(&a, &worker_template(), &[], &mut rng);
        assert!(s.tasks.iter().all(|t| !t.kind.is_professional()));
        assert!(s.is_well_formed());
    }

    #[test]
    fn template_validation() {
        let t = |s: &str| s.parse::<TemplateTask>().unwrap();
        assert!(ProfessionTemplate::new(vec![t("work,8,16"), t("school,9,10")]).is_err());
        assert!(ProfessionTemplate::new(vec![t("work,8,16"), t("service_visit,15,18")]).is_err());
        assert!(ProfessionTemplate::new(vec![t("return_home,20,23")]).is_err());
        assert!(ProfessionTemplate::new(vec![t("work,8,24")]).is_err());
        assert!(ProfessionTemplate::new(vec![
            t("service_visit,8,10"),
            t("service_visit,10,12"),
            t("service_visit,12,14")
        ])
        .is_err());
        assert!("work,8".parse::<TemplateTask>().is_err());
        assert!("nap,8,9".parse::<TemplateTask>().is_err());
        assert_eq!(t("work,8,16").to_string(), "work,8,16");
    }

    #[test]
    fn fuzzed_schedules_are_well_formed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let kinds = [TaskKind::Work, TaskKind::School, TaskKind::HospitalVisit, TaskKind::ServiceVisit];
        let cats = vec!["x".to_string(), "y".to_string()];
        let mut built = 0;
        while built < 10_000 {
            let n = rng.random_range(0..4);
            let mut hour = 0.0;
            let mut tasks = Vec::new();
            for _ in 0..n {
                let start = hour + rng.random_range(0..4) as f64;
                let end = start + rng.random_range(1..6) as f64;
                hour = end;
                tasks.push(TemplateTask { kind: kinds[rng.random_range(0..4)], start_hours: start, end_hours: end });
            }
            let Ok(template) = ProfessionTemplate::new(tasks) else { continue };
            let mut a = agent(built as u32, Profession::Other);
            a.assigned_poi = rng.random_bool(0.8).then_some(3);
            let s = generate_daily_schedule(&a, &template, &cats, &mut rng);
            assert!(s.is_well_formed(), "{s:?}");
            built += 1;
        }
    }
}
