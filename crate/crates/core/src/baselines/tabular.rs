use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use crate::error::{Error, Result};
use crate::ingest::{normalize_title, InteractionRecord, Platform, RecordKind};

pub const REDDIT_COLUMNS: [&str; 7] = [
    "frac_submissions_same_title_as_troll",
    "frac_comments_reply_to_troll",
    "frac_comments_replied_by_troll",
    "frac_comments_in_troll_threads",
    "total_submissions",
    "total_comments",
    "account_age_days",
];

pub const X_COLUMNS: [&str; 7] = [
    "avg_mentions_per_tweet",
    "tweet_count",
    "followers",
    "following",
    "description_len",
    "avg_tweet_length",
    "fraction_retweets",
];

/// One row per author, in user-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularTable {
    pub columns: Vec<String>,
    pub users: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Authors whose records carried no profile fields (filled with 0).
    pub missing_profile: BTreeSet<String>,
}

impl TabularTable {
    pub fn row(&self, user: &str) -> Option<&[f64]> {
        self.users.binary_search_by(|u| u.as_str().cmp(user)).ok().map(|i| self.values[i].as_slice())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|n| n == name)?;
        Some(self.values.iter().map(|r| r[c]).collect())
    }

    /// CSV with a `user_id` column followed by the features.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Error::Data(e.to_string());
        let header: Vec<&str> = std::iter::once("user_id").chain(self.columns.iter().map(String::as_str)).collect();
        out.write_record(&header).map_err(csv_err)?;
        for (u, row) in self.users.iter().zip(&self.values) {
            let fields: Vec<String> =
                std::iter::once(u.clone()).chain(row.iter().map(|&v| crate::canonical::fmt_g17(v))).collect();
            out.write_record(&fields).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn strip_prefix(id: &str) -> &str {
    id.split_once('_').map_or(id, |(_, rest)| rest)
}

fn reddit(records: &[InteractionRecord], trolls: &BTreeSet<String>) -> BTreeMap<String, Vec<f64>> {
    #[derive(Default)]
    struct Acc {
        submissions: usize,
        same_title: usize,
        comments: usize,
        reply_to_troll: usize,
        replied_by_troll: usize,
        in_troll_thread: usize,
        created: Option<i64>,
    }
    let last = records.iter().map(|r| r.created_at).max().unwrap_or(0);
    let mut troll_titles: HashMap<String, BTreeSet<&str>> = HashMap::new();
    let mut troll_threads: BTreeSet<&str> = BTreeSet::new();
    let mut author_of: HashMap<&str, &str> = HashMap::new();
    for r in records {
        author_of.insert(r.record_id.as_str(), r.author.as_str());
        if trolls.contains(&r.author) {
            if r.kind == RecordKind::Submission {
                troll_threads.insert(r.record_id.as_str());
                if let Some(t) = &r.title {
                    troll_titles.entry(normalize_title(t)).or_default().insert(r.author.as_str());
                }
            }
        }
    }
    // comment ids that received a reply from a troll
    let mut troll_replied: BTreeSet<&str> = BTreeSet::new();
    for r in records.iter().filter(|r| r.kind == RecordKind::Comment && trolls.contains(&r.author)) {
        if let Some(p) = r.parent_id.as_deref().filter(|p| p.starts_with("t1_") || !p.contains('_')) {
            troll_replied.insert(strip_prefix(p));
        }
    }
    let mut acc: BTreeMap<String, Acc> = BTreeMap::new();
    for r in records {
        let a = acc.entry(r.author.clone()).or_default();
        if let Some(ts) = r.profile.as_ref().and_then(|p| p.account_created_at) {
            a.created = Some(ts);
        }
        match r.kind {
            RecordKind::Submission => {
                a.submissions += 1;
                let shared = r.title.as_deref().map(normalize_title).and_then(|t| troll_titles.get(&t));
                if shared.is_some_and(|authors| authors.iter().any(|&x| x != r.author)) {
                    a.same_title += 1;
                }
            }
            RecordKind::Comment => {
                a.comments += 1;
                if r.parent_author.as_ref().is_some_and(|p| trolls.contains(p)) {
                    a.reply_to_troll += 1;
                }
                if troll_replied.contains(r.record_id.as_str()) {
                    a.replied_by_troll += 1;
                }
                let thread = r.link_id.as_deref().map(strip_prefix);
                if thread.is_some_and(|t| troll_threads.contains(t) && author_of.get(t).is_some_and(|&x| x != r.author)) {
                    a.in_troll_thread += 1;
                }
            }
            _ => {}
        }
    }
    acc.into_iter()
        .map(|(u, a)| {
            let age = a.created.map_or(0.0, |c| (last - c).max(0) as f64 / crate::graph::SECONDS_PER_DAY as f64);
            let row = vec![
                ratio(a.same_title, a.submissions),
                ratio(a.reply_to_troll, a.comments),
                ratio(a.replied_by_troll, a.comments),
                ratio(a.in_troll_thread, a.comments),
                a.submissions as f64,
                a.comments as f64,
                age,
            ];
            (u, row)
        })
        .collect()
}

fn x(records: &[InteractionRecord]) -> (BTreeMap<String, Vec<f64>>, BTreeSet<String>) {
    #[derive(Default)]
    struct Acc {
        tweets: usize,
        mentions: usize,
        chars: usize,
        retweets: usize,
        followers: Option<u64>,
        following: Option<u64>,
        description_len: Option<u64>,
    }
    let mut acc: BTreeMap<String, Acc> = BTreeMap::new();
    for r in records {
        let a = acc.entry(r.author.clone()).or_default();
        a.tweets += 1;
        a.mentions += r.mentioned_authors.len();
        a.chars += r.text.as_deref().map_or(0, |t| t.chars().count());
        if r.kind == RecordKind::Retweet {
            a.retweets += 1;
        }
        if let Some(p) = &r.profile {
            a.followers = p.followers.or(a.followers);
            a.following = p.following.or(a.following);
            a.description_len = p.description_len.or(a.description_len);
        }
    }
    let mut missing = BTreeSet::new();
    let rows = acc
        .into_iter()
        .map(|(u, a)| {
            if a.followers.is_none() && a.following.is_none() && a.description_len.is_none() {
                missing.insert(u.clone());
            }
            let row = vec![
                ratio(a.mentions, a.tweets),
                a.tweets as f64,
                a.followers.unwrap_or(0) as f64,
                a.following.unwrap_or(0) as f64,
                a.description_len.unwrap_or(0) as f64,
                ratio(a.chars, a.tweets),
                ratio(a.retweets, a.tweets),
            ];
            (u, row)
        })
        .collect();
    (rows, missing)
}

/// Per-author feature rows for `platform`; fractions use `trolls` as the
/// reference set and are 0 when their denominator is 0.
pub fn tabular_features(records: &[InteractionRecord], trolls: &BTreeSet<String>, platform: Platform) -> Result<TabularTable> {
    let own: Vec<InteractionRecord> = records.iter().filter(|r| r.platform == platform).cloned().collect();
    let (rows, missing, columns): (BTreeMap<String, Vec<f64>>, BTreeSet<String>, &[&str]) = match platform {
        Platform::Reddit => (reddit(&own, trolls), BTreeSet::new(), &REDDIT_COLUMNS),
        Platform::X => {
            let (rows, missing) = x(&own);
            (rows, missing, &X_COLUMNS)
        }
    };
    if !missing.is_empty() {
        log::warn!("{} authors have no profile fields; using 0", missing.len());
    }
    let (users, values) = rows.into_iter().unzip();
    Ok(TabularTable { columns: columns.iter().map(|s| s.to_string()).collect(), users, values, missing_profile: missing })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, author: &str, kind: RecordKind, parent: Option<&str>) -> InteractionRecord {
        InteractionRecord {
            record_id: id.into(),
            platform: Platform::Reddit,
            author: author.into(),
            created_at: 100,
            kind,
            title: None,
            text: None,
            parent_author: parent.map(String::from),
            retweeted_author: None,
            mentioned_authors: vec![],
            subreddit: None,
            link_id: None,
            parent_id: None,
            profile: None,
        }
    }

    #[test]
    fn reply_fraction_hand_count() {
        let trolls: BTreeSet<String> = ["t".to_string()].into();
        let records = vec![
            rec("1", "u", RecordKind::Comment, Some("t")),
            rec("2", "u", RecordKind::Comment, Some("a")),
            rec("3", "u", RecordKind::Comment, Some("b")),
            rec("4", "u", RecordKind::Comment, Some("c")),
        ];
        let t = tabular_features(&records, &trolls, Platform::Reddit).unwrap();
        let row = t.row("u").unwrap();
        assert_eq!(row[1], 0.25);
        assert_eq!(row[0], 0.0);
        assert_eq!(row[4], 0.0);
    }

    #[test]
    fn all_retweets() {
        let mut r = rec("1", "u", RecordKind::Retweet, None);
        r.platform = Platform::X;
        r.retweeted_author = Some("v".into());
        let t = tabular_features(&[r.clone(), r], &BTreeSet::new(), Platform::X).unwrap();
        assert_eq!(t.row("u").unwrap()[6], 1.0);
        assert!(t.missing_profile.contains("u"));
    }
}
