//! Labeled synthetic influence campaigns.
//!
//! Benign users interact through preferential attachment. Trolls are split
//! into clusters that amplify each other at a fixed multiple of the benign
//! pairwise rate, and target benign audiences. Audiences can rotate between
//! cohorts every phase, so the users a campaign touches next week depend on
//! who it touched before.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Fenwick;
use crate::graph::SECONDS_PER_DAY;
use crate::ingest::{InteractionRecord, Platform, Profile, RecordKind, UserLabel};
use crate::seed::{stream_rng, Rng};

/// Log-normal laws for one profile or behavior statistic: location `benign`
/// or `troll` in log space, shared `spread`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overlap {
    pub benign: f64,
    pub troll: f64,
    pub spread: f64,
}

impl Overlap {
    fn sample(&self, troll: bool, rng: &mut Rng) -> f64 {
        let mu = if troll { self.troll } else { self.benign };
        LogNormal::new(mu, self.spread).map_or(mu.exp(), |d| d.sample(rng))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CampaignConfig {
    pub platform: Platform,
    pub n_users: usize,
    pub n_trolls: usize,
    pub duration_days: u32,
    pub troll_cluster_count: usize,
    /// Benign preferential-attachment interactions per day.
    pub benign_rate: f64,
    /// Interactions per day among the benign cohort currently targeted.
    pub engaged_rate: f64,
    /// Intra-cluster troll pairwise rate divided by the benign pairwise rate.
    pub intra_multiplier: f64,
    /// Troll → benign interactions per troll per day.
    pub targeting_rate: f64,
    /// Benign cohorts the campaign cycles through; 0 targets all benign users.
    pub audience_count: usize,
    pub audience_size: usize,
    pub phase_days: u32,
    /// Troll activity multipliers per phase, cycled.
    pub drift: Vec<f64>,
    /// Fraction of trolls that skip cluster amplification after their first
    /// required interaction and only target users.
    pub lone_troll_fraction: f64,
    /// Non-interaction posts per user per day, scaled by user activity.
    pub standalone_rate: f64,
    /// Probability a troll post carries its campaign narrative token.
    pub troll_narrative_prob: f64,
    /// Probability a benign post carries some narrative token.
    pub benign_narrative_prob: f64,
    pub followers: Overlap,
    pub following: Overlap,
    pub description_len: Overlap,
    pub post_words: Overlap,
    /// Share of interactions that are retweets (X) or title reshares (Reddit).
    pub reshare_share: [f64; 2],
    /// Share of X interactions that are mentions.
    pub mention_share: [f64; 2],
    /// Trolls match benign users of equal activity in expected post volume
    /// and in the fractions of retweets and mentions among their posts.
    pub camouflage: bool,
    pub start: i64,
    pub seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self::default_small()
    }
}

impl CampaignConfig {
    /// 2k users, 50 trolls in 5 clusters, 90 days, no drift.
    pub fn default_small() -> Self {
        Self {
            platform: Platform::Reddit,
            n_users: 2000,
            n_trolls: 50,
            duration_days: 90,
            troll_cluster_count: 5,
            benign_rate: 600.0,
            engaged_rate: 0.0,
            intra_multiplier: 60.0,
            targeting_rate: 2.0,
            audience_count: 0,
            audience_size: 0,
            phase_days: 7,
            drift: vec![1.0],
            lone_troll_fraction: 0.0,
            standalone_rate: 0.2,
            troll_narrative_prob: 0.5,
            benign_narrative_prob: 0.05,
            followers: Overlap { benign: 5.0, troll: 5.2, spread: 1.2 },
            following: Overlap { benign: 5.0, troll: 5.2, spread: 1.0 },
            description_len: Overlap { benign: 4.0, troll: 3.9, spread: 0.6 },
            post_words: Overlap { benign: 2.5, troll: 2.6, spread: 0.5 },
            reshare_share: [0.2, 0.3],
            mention_share: [0.2, 0.2],
            camouflage: false,
            start: 1_600_000_000 - 1_600_000_000 % SECONDS_PER_DAY,
            seed: 7,
        }
    }

    /// Weekly audience rotation between two cohorts; most benign activity is
    /// driven by the current audience.
    pub fn drifting() -> Self {
        Self {
            benign_rate: 120.0,
            engaged_rate: 300.0,
            targeting_rate: 3.0,
            audience_count: 2,
            audience_size: 250,
            phase_days: 7,
            drift: vec![1.0, 1.2, 0.8],
            ..Self::default_small()
        }
    }

    /// X campaign whose trolls amplify each other heavily with repeated
    /// interactions; profile and behavior statistics overlap strongly.
    pub fn planted() -> Self {
        Self {
            platform: Platform::X,
            n_users: 1500,
            n_trolls: 200,
            troll_cluster_count: 20,
            benign_rate: 400.0,
            intra_multiplier: 150.0,
            targeting_rate: 0.5,
            lone_troll_fraction: 0.15,
            standalone_rate: 0.6,
            reshare_share: [0.2, 0.2],
            camouflage: true,
            ..Self::default_small()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "default" | "default_small" => Ok(Self::default_small()),
            "drifting" => Ok(Self::drifting()),
            "planted" => Ok(Self::planted()),
            other => Err(Error::Config(format!("unknown campaign preset {other:?} (default, drifting, planted)"))),
        }
    }

    fn benign_count(&self) -> usize {
        self.n_users - self.n_trolls
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_trolls >= self.n_users {
            return bad(format!("n_trolls ({}) must be below n_users ({})", self.n_trolls, self.n_users));
        }
        if self.benign_count() < 2 {
            return bad("a campaign needs at least 2 benign users".into());
        }
        if self.duration_days == 0 || self.phase_days == 0 {
            return bad("duration and phase length must be at least one day".into());
        }
        if self.n_trolls > 0 && (self.troll_cluster_count == 0 || self.n_trolls < 2 * self.troll_cluster_count) {
            return bad(format!(
                "{} trolls cannot fill {} clusters of at least 2",
                self.n_trolls, self.troll_cluster_count
            ));
        }
        if self.audience_count * self.audience_size > self.benign_count() {
            return bad("audience cohorts exceed the benign population".into());
        }
        if self.audience_count > 0 && self.audience_size < 2 {
            return bad("audience cohorts need at least 2 users".into());
        }
        let rates = [
            self.benign_rate,
            self.engaged_rate,
            self.intra_multiplier,
            self.targeting_rate,
            self.standalone_rate,
        ];
        if rates.iter().chain(&self.drift).any(|r| !r.is_finite() || *r < 0.0) || self.drift.is_empty() {
            return bad("rates and drift multipliers must be finite and nonnegative".into());
        }
        let probs = [self.lone_troll_fraction, self.troll_narrative_prob, self.benign_narrative_prob];
        let shares = self.reshare_share.iter().chain(&self.mention_share);
        if probs.iter().chain(shares).any(|p| !(0.0..=1.0).contains(p))
            || self.reshare_share[0] + self.mention_share[0] > 1.0
            || self.reshare_share[1] + self.mention_share[1] > 1.0
        {
            return bad("probabilities must lie in [0, 1]".into());
        }
        Ok(())
    }

    /// Expected benign–benign interactions per unordered benign pair per day.
    pub fn benign_pair_rate(&self) -> f64 {
        let nb = self.benign_count() as f64;
        let engaged = if self.audience_count > 0 { self.engaged_rate } else { 0.0 };
        (self.benign_rate + engaged) / (nb * (nb - 1.0) / 2.0)
    }

    /// Expected interactions per day over all sources.
    pub fn expected_daily_edges(&self) -> f64 {
        let mean_drift = self.drift.iter().sum::<f64>() / self.drift.len() as f64;
        let nb = self.benign_count() as f64;
        let pairs = nb * (nb - 1.0) / 2.0;
        let intra_pairs = self.cluster_sizes().iter().map(|&s| (s * s.saturating_sub(1) / 2) as f64).sum::<f64>();
        let troll = self.targeting_rate * self.n_trolls as f64 + self.benign_pair_rate() * self.intra_multiplier * intra_pairs;
        self.benign_pair_rate() * pairs + troll * mean_drift
    }

    fn cluster_sizes(&self) -> Vec<usize> {
        let k = self.troll_cluster_count.max(1);
        (0..k).map(|c| self.n_trolls / k + usize::from(c < self.n_trolls % k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub records: Vec<InteractionRecord>,
    pub labels: BTreeMap<String, UserLabel>,
    /// Troll user ids per cluster.
    pub clusters: Vec<Vec<String>>,
    /// Benign user ids per audience cohort.
    pub audiences: Vec<Vec<String>>,
}

impl Campaign {
    pub fn write_records<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            writeln!(w, "{}", r.to_raw_json()?)?;
        }
        Ok(())
    }

    pub fn write_labels<W: Write>(&self, w: W) -> Result<()> {
        crate::ingest::write_labels(&self.labels, w)
    }

    pub fn trolls(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().filter(|(_, l)| **l == UserLabel::Troll).map(|(u, _)| u.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Channel {
    Benign,
    Intra,
    Targeting,
}

#[derive(Debug, Clone)]
struct User {
    name: String,
    troll: bool,
    cluster: Option<usize>,
    activity: f64,
    profile: Profile,
    reshare_share: f64,
    mention_share: f64,
    /// Expected standalone posts per day.
    standalone: f64,
    post_words: f64,
}

struct Generator<'a> {
    cfg: &'a CampaignConfig,
    rng: Rng,
    users: Vec<User>,
    out: Vec<(i64, u64, InteractionRecord)>,
    seq: u64,
    title_seq: u64,
}

fn poisson(rate: f64, rng: &mut Rng) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).map_or(0, |d| d.sample(rng) as u64)
}

impl Generator<'_> {
    fn text(&mut self, user: usize) -> String {
        let u = &self.users[user];
        let words = (u.post_words.round() as usize).max(1);
        let marker = if u.troll {
            (self.rng.random::<f64>() < self.cfg.troll_narrative_prob).then(|| format!("narrative{}", u.cluster.unwrap_or(0)))
        } else {
            (self.rng.random::<f64>() < self.cfg.benign_narrative_prob)
                .then(|| format!("narrative{}", self.rng.random_range(0..self.cfg.troll_cluster_count.max(1))))
        };
        let mut tokens: Vec<String> = (0..words).map(|_| format!("w{}", self.rng.random_range(0..500))).collect();
        if let Some(m) = marker {
            let at = self.rng.random_range(0..=tokens.len());
            tokens.insert(at, m);
        }
        tokens.join(" ")
    }

    fn push(&mut self, ts: i64, record: InteractionRecord) {
        self.out.push((ts, self.seq, record));
        self.seq += 1;
    }

    fn record(&mut self, user: usize, ts: i64, kind: RecordKind) -> InteractionRecord {
        let text = self.text(user);
        let u = &self.users[user];
        let x = self.cfg.platform == Platform::X;
        InteractionRecord {
            record_id: String::new(),
            platform: self.cfg.platform,
            author: u.name.clone(),
            created_at: ts,
            kind,
            title: None,
            text: Some(text),
            parent_author: None,
            retweeted_author: None,
            mentioned_authors: Vec::new(),
            subreddit: (!x).then(|| "s0".to_string()),
            link_id: None,
            parent_id: None,
            profile: Some(if x {
                u.profile.clone()
            } else {
                Profile { account_created_at: u.profile.account_created_at, ..Profile::default() }
            }),
        }
    }

    fn standalone(&mut self, user: usize, day: i64) {
        let ts = day + self.rng.random_range(0..SECONDS_PER_DAY);
        let kind = if self.cfg.platform == Platform::X { RecordKind::Tweet } else { RecordKind::Submission };
        let mut r = self.record(user, ts, kind);
        if kind == RecordKind::Submission {
            self.title_seq += 1;
            r.title = Some(format!("t{}", self.title_seq));
        }
        self.push(ts, r);
    }

    /// One interaction in which `actor` acts on `target`; yields exactly one edge.
    fn interact(&mut self, actor: usize, target: usize, day: i64) {
        let a = &self.users[actor];
        let (reshare, mention) = (a.reshare_share, a.mention_share);
        let draw: f64 = self.rng.random();
        match self.cfg.platform {
            Platform::X => {
                let ts = day + self.rng.random_range(0..SECONDS_PER_DAY);
                let target_name = self.users[target].name.clone();
                let r = if draw < reshare {
                    let mut r = self.record(actor, ts, RecordKind::Retweet);
                    r.retweeted_author = Some(target_name);
                    r
                } else if draw < reshare + mention {
                    let mut r = self.record(actor, ts, RecordKind::MentionBearing);
                    r.mentioned_authors = vec![target_name];
                    r
                } else {
                    let mut r = self.record(actor, ts, RecordKind::Reply);
                    r.parent_author = Some(target_name);
                    r
                };
                self.push(ts, r);
            }
            Platform::Reddit => {
                let t2 = day + self.rng.random_range(1..SECONDS_PER_DAY);
                if draw < reshare {
                    // the target posts first; the actor copies the title later
                    let t1 = day + self.rng.random_range(0..t2 - day);
                    self.title_seq += 1;
                    let title = format!("t{}", self.title_seq);
                    let mut original = self.record(target, t1, RecordKind::Submission);
                    original.title = Some(title.clone());
                    self.push(t1, original);
                    let mut copy = self.record(actor, t2, RecordKind::Submission);
                    copy.title = Some(title);
                    self.push(t2, copy);
                } else {
                    let mut r = self.record(actor, t2, RecordKind::Comment);
                    r.parent_author = Some(self.users[target].name.clone());
                    self.push(t2, r);
                }
            }
        }
    }
}

fn pick_other(rng: &mut Rng, pool: &[usize], not: usize) -> usize {
    loop {
        let c = pool[rng.random_range(0..pool.len())];
        if c != not {
            return c;
        }
    }
}

/// Generates records and labels; records come out in nondecreasing time.
pub fn generate_campaign(cfg: &CampaignConfig) -> Result<Campaign> {
    cfg.validate()?;
    let expected = cfg.expected_daily_edges();
    if expected < 16.0 {
        log::warn!("campaign expects {expected:.1} edges per day; snapshot width selection will be coarse");
    }
    let mut rng = stream_rng(cfg.seed, "synth.campaign");

    let mut order: Vec<usize> = (0..cfg.n_users).collect();
    order.shuffle(&mut rng);
    let troll_ids: Vec<usize> = order[..cfg.n_trolls].to_vec();
    let mut is_troll = vec![false; cfg.n_users];
    troll_ids.iter().for_each(|&i| is_troll[i] = true);
    let benign: Vec<usize> = (0..cfg.n_users).filter(|&i| !is_troll[i]).collect();

    let sizes = cfg.cluster_sizes();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut next = 0;
    for &s in sizes.iter().filter(|&&s| s > 0) {
        clusters.push(troll_ids[next..next + s].to_vec());
        next += s;
    }
    let mut cluster_of = vec![None; cfg.n_users];
    for (c, members) in clusters.iter().enumerate() {
        members.iter().for_each(|&m| cluster_of[m] = Some(c));
    }
    let mut shuffled_benign = benign.clone();
    shuffled_benign.shuffle(&mut rng);
    let audiences: Vec<Vec<usize>> = (0..cfg.audience_count)
        .map(|a| shuffled_benign[a * cfg.audience_size..(a + 1) * cfg.audience_size].to_vec())
        .collect();

    let activity_law = LogNormal::new(-0.5, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let mut users: Vec<User> = (0..cfg.n_users)
        .map(|i| {
            let troll = is_troll[i];
            let k = usize::from(troll);
            let profile = Profile {
                followers: Some(cfg.followers.sample(troll, &mut rng).round() as u64),
                following: Some(cfg.following.sample(troll, &mut rng).round() as u64),
                description_len: Some(cfg.description_len.sample(troll, &mut rng).round().min(160.0) as u64),
                account_created_at: Some(cfg.start - rng.random_range(30..3000) * SECONDS_PER_DAY),
            };
            let jitter = |rng: &mut Rng, p: f64| (p * rng.random_range(0.5..1.5)).clamp(0.0, 0.49);
            User {
                name: format!("user{i:05}"),
                troll,
                cluster: cluster_of[i],
                activity: activity_law.sample(&mut rng),
                profile,
                reshare_share: jitter(&mut rng, cfg.reshare_share[k]),
                mention_share: jitter(&mut rng, cfg.mention_share[k]),
                standalone: 0.0,
                post_words: cfg.post_words.sample(troll, &mut rng),
            }
        })
        .collect();
    let lone: Vec<bool> = (0..cfg.n_users).map(|i| is_troll[i] && rng.random::<f64>() < cfg.lone_troll_fraction).collect();

    let pair_rate = cfg.benign_pair_rate();
    let benign_total: f64 = benign.iter().map(|&b| users[b].activity).sum();
    let troll_total: f64 = troll_ids.iter().map(|&t| users[t].activity).sum();
    let mean_drift = cfg.drift.iter().sum::<f64>() / cfg.drift.len() as f64;
    for u in users.iter_mut() {
        u.standalone = cfg.standalone_rate * u.activity.max(0.2);
    }
    for members in &clusters {
        let active = members.iter().filter(|&&m| !lone[m]).count();
        let pairs = (members.len() * (members.len() - 1) / 2) as f64;
        let intra = cfg.intra_multiplier * pair_rate * pairs * active as f64 / members.len() as f64;
        for &m in members {
            let u = &mut users[m];
            let own_intra = if lone[m] || active == 0 { 0.0 } else { intra / active as f64 };
            let interactions = (cfg.targeting_rate * cfg.n_trolls as f64 * u.activity / troll_total + own_intra) * mean_drift;
            if cfg.camouflage && interactions > 0.0 {
                let as_benign = cfg.benign_rate * u.activity / benign_total;
                let benign_shares = [
                    u.reshare_share * cfg.reshare_share[0] / cfg.reshare_share[1].max(1e-9),
                    u.mention_share * cfg.mention_share[0] / cfg.mention_share[1].max(1e-9),
                ];
                u.standalone = (as_benign + u.standalone - interactions).max(0.0);
                let scale = as_benign / interactions;
                u.reshare_share = (benign_shares[0] * scale).min(0.49);
                u.mention_share = (benign_shares[1] * scale).min(0.49);
            }
        }
    }

    let mut g = Generator { cfg, rng, users, out: Vec::new(), seq: 0, title_seq: 0 };

    // actor choice ∝ activity; target choice ∝ received + 1 over benign users
    let benign_activity: Vec<f64> = benign.iter().map(|&b| g.users[b].activity).collect();
    let actor_law = rand::distr::weighted::WeightedIndex::new(&benign_activity).map_err(|e| Error::Config(e.to_string()))?;
    let mut popularity = Fenwick::new(&vec![1u64; benign.len()]);
    let troll_activity: Vec<f64> = troll_ids.iter().map(|&t| g.users[t].activity).collect();
    let troll_law = (!troll_ids.is_empty())
        .then(|| rand::distr::weighted::WeightedIndex::new(&troll_activity))
        .transpose()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut involved = vec![false; cfg.n_users];

    for d in 0..i64::from(cfg.duration_days) {
        let day = cfg.start + d * SECONDS_PER_DAY;
        let phase = (d / i64::from(cfg.phase_days)) as usize;
        let drift = cfg.drift[phase % cfg.drift.len()];
        let mut events: Vec<(Channel, usize, usize)> = Vec::new();

        for _ in 0..poisson(cfg.benign_rate, &mut g.rng) {
            let a = actor_law.sample(&mut g.rng);
            let t = loop {
                let t = popularity.find(g.rng.random_range(0..popularity.total()));
                if t != a {
                    break t;
                }
            };
            popularity.add(t, 1);
            events.push((Channel::Benign, benign[a], benign[t]));
        }
        let audience = (!audiences.is_empty()).then(|| &audiences[phase % audiences.len()]);
        if let Some(aud) = audience {
            for _ in 0..poisson(cfg.engaged_rate, &mut g.rng) {
                let a = aud[g.rng.random_range(0..aud.len())];
                let t = pick_other(&mut g.rng, aud, a);
                events.push((Channel::Benign, a, t));
            }
        }
        for members in &clusters {
            let pairs = (members.len() * (members.len() - 1) / 2) as f64;
            let active: Vec<usize> = members.iter().copied().filter(|&m| !lone[m]).collect();
            let share = if members.is_empty() { 0.0 } else { active.len() as f64 / members.len() as f64 };
            for _ in 0..poisson(cfg.intra_multiplier * pair_rate * pairs * drift * share, &mut g.rng) {
                if active.len() < 2 {
                    break;
                }
                let a = active[g.rng.random_range(0..active.len())];
                let t = pick_other(&mut g.rng, &active, a);
                events.push((Channel::Intra, a, t));
            }
        }
        for _ in 0..poisson(cfg.targeting_rate * cfg.n_trolls as f64 * drift, &mut g.rng) {
            let Some(law) = &troll_law else { break };
            let a = troll_ids[law.sample(&mut g.rng)];
            let t = match audience {
                Some(aud) => aud[g.rng.random_range(0..aud.len())],
                None => benign[popularity.find(g.rng.random_range(0..popularity.total()))],
            };
            events.push((Channel::Targeting, a, t));
        }
        for (channel, a, t) in events {
            if channel == Channel::Intra {
                involved[a] = true;
                involved[t] = true;
            }
            g.interact(a, t, day);
        }
        for u in 0..cfg.n_users {
            for _ in 0..poisson(g.users[u].standalone, &mut g.rng) {
                g.standalone(u, day);
            }
        }
    }

    // every troll takes part in at least one cluster interaction
    for members in &clusters {
        for &m in members {
            if !involved[m] {
                let t = pick_other(&mut g.rng, members, m);
                let d = g.rng.random_range(0..i64::from(cfg.duration_days));
                g.interact(m, t, cfg.start + d * SECONDS_PER_DAY);
                involved[m] = true;
                involved[t] = true;
            }
        }
    }

    let Generator { users, mut out, .. } = g;
    out.sort_by_key(|&(ts, seq, _)| (ts, seq));
    let records = out
        .into_iter()
        .enumerate()
        .map(|(i, (_, _, mut r))| {
            r.record_id = format!("r{i:08}");
            r
        })
        .collect();
    let labels = users
        .iter()
        .map(|u| (u.name.clone(), if u.troll { UserLabel::Troll } else { UserLabel::Benign }))
        .collect();
    let names = |ids: &[usize]| ids.iter().map(|&i| users[i].name.clone()).collect::<Vec<_>>();
    Ok(Campaign {
        records,
        labels,
        clusters: clusters.iter().map(|c| names(c)).collect(),
        audiences: audiences.iter().map(|a| names(a)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> CampaignConfig {
        CampaignConfig { n_users: 120, n_trolls: 10, troll_cluster_count: 2, duration_days: 10, benign_rate: 40.0, ..CampaignConfig::default_small() }
    }

    #[test]
    fn deterministic_and_time_ordered() {
        let a = generate_campaign(&tiny()).unwrap();
        let b = generate_campaign(&tiny()).unwrap();
        assert_eq!(a, b);
        assert!(a.records.windows(2).all(|w| w[0].created_at <= w[1].created_at));
        assert_eq!(a.trolls().count(), 10);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = tiny();
        c.n_trolls = c.n_users;
        assert!(generate_campaign(&c).is_err());
        let mut c = tiny();
        c.n_trolls = 3;
        assert!(generate_campaign(&c).is_err());
        assert!(CampaignConfig::preset("nope").is_err());
    }
}
