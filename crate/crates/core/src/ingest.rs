//! Platform log parsing and interaction-edge extraction.
//!
//! Edges follow the `(u, v)` convention: `source = u` is the author whose
//! content was acted upon, `target = v` is the acting user. In-degree of a
//! node therefore counts the interactions it performed, out-degree the
//! interactions it received.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Reddit,
    X,
}

impl FromStr for Platform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "reddit" => Ok(Platform::Reddit),
            "x" | "twitter" => Ok(Platform::X),
            other => Err(Error::Config(format!("unknown platform {other:?} (expected reddit or x)"))),
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Platform::Reddit => "reddit",
            Platform::X => "x",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Submission,
    Comment,
    Tweet,
    Retweet,
    Reply,
    MentionBearing,
}

/// Optional account metadata carried by some records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub followers: Option<u64>,
    pub following: Option<u64>,
    pub description_len: Option<u64>,
    pub account_created_at: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub record_id: String,
    pub platform: Platform,
    pub author: String,
    pub created_at: i64,
    pub kind: RecordKind,
    pub title: Option<String>,
    pub text: Option<String>,
    pub parent_author: Option<String>,
    pub retweeted_author: Option<String>,
    pub mentioned_authors: Vec<String>,
    pub subreddit: Option<String>,
    /// Reddit thread submission id (`t3_` prefix optional).
    pub link_id: Option<String>,
    /// Reddit parent fullname: `t1_` for a comment, `t3_` for a submission.
    pub parent_id: Option<String>,
    pub profile: Option<Profile>,
}

impl InteractionRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.created_at <= 0 {
            return Err(format!("created_at must be positive, got {}", self.created_at));
        }
        if self.author.trim().is_empty() {
            return Err("author is empty".into());
        }
        match self.kind {
            RecordKind::Retweet if self.retweeted_author.is_none() => {
                Err("retweet without retweeted author".into())
            }
            RecordKind::Reply | RecordKind::Comment if self.parent_author.is_none() => {
                Err("reply/comment without parent_author".into())
            }
            _ => Ok(()),
        }
    }

    /// All text this record contributes to its author's post history.
    pub fn content(&self) -> Option<String> {
        match (&self.title, &self.text) {
            (Some(t), Some(b)) if !b.is_empty() => Some(format!("{t}\n{b}")),
            (Some(t), _) => Some(t.clone()),
            (None, Some(b)) => Some(b.clone()),
            (None, None) => None,
        }
    }

    /// Renders the record in its platform's raw line schema.
    pub fn to_raw_json(&self) -> Result<String> {
        let line = match self.platform {
            Platform::Reddit => serde_json::to_string(&RedditLine {
                id: self.record_id.clone(),
                author: self.author.clone(),
                created_utc: Some(self.created_at),
                kind: match self.kind {
                    RecordKind::Submission => "submission".into(),
                    _ => "comment".into(),
                },
                title: self.title.clone(),
                body: self.text.clone(),
                parent_author: self.parent_author.clone(),
                subreddit: self.subreddit.clone(),
                link_id: self.link_id.clone(),
                parent_id: self.parent_id.clone(),
                author_created_utc: self.profile.as_ref().and_then(|p| p.account_created_at),
            })?,
            Platform::X => {
                let profile = self.profile.clone().unwrap_or_default();
                serde_json::to_string(&XLine {
                    tweet_id: self.record_id.clone(),
                    user_id: self.author.clone(),
                    created_at: Some(self.created_at),
                    text: self.text.clone().unwrap_or_default(),
                    reply_to_user: match self.kind {
                        RecordKind::Reply => self.parent_author.clone(),
                        _ => None,
                    },
                    retweet_of_user: self.retweeted_author.clone(),
                    mentions: self.mentioned_authors.clone(),
                    followers: profile.followers,
                    following: profile.following,
                    description_len: profile.description_len,
                    account_created_at: profile.account_created_at,
                })?
            }
        };
        Ok(line)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RedditLine {
    id: String,
    author: String,
    created_utc: Option<i64>,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent_author: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subreddit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    link_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    author_created_utc: Option<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct XLine {
    tweet_id: String,
    user_id: String,
    created_at: Option<i64>,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reply_to_user: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    retweet_of_user: Option<String>,
    #[serde(default)]
    mentions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    followers: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    following: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description_len: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    account_created_at: Option<i64>,
}

fn parse_reddit(line: &str) -> std::result::Result<InteractionRecord, String> {
    let raw: RedditLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let created_at = raw.created_utc.ok_or("missing field `created_utc`")?;
    let kind = match raw.kind.as_str() {
        "submission" => RecordKind::Submission,
        "comment" => RecordKind::Comment,
        other => return Err(format!("unknown reddit record type {other:?}")),
    };
    let profile = raw.author_created_utc.map(|ts| Profile {
        account_created_at: Some(ts),
        ..Profile::default()
    });
    Ok(InteractionRecord {
        record_id: raw.id,
        platform: Platform::Reddit,
        author: raw.author,
        created_at,
        kind,
        title: raw.title,
        text: raw.body,
        parent_author: raw.parent_author,
        retweeted_author: None,
        mentioned_authors: Vec::new(),
        subreddit: raw.subreddit,
        link_id: raw.link_id,
        parent_id: raw.parent_id,
        profile,
    })
}

fn parse_x(line: &str) -> std::result::Result<InteractionRecord, String> {
    let raw: XLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let created_at = raw.created_at.ok_or("missing field `created_at`")?;
    let kind = if raw.retweet_of_user.is_some() {
        RecordKind::Retweet
    } else if raw.reply_to_user.is_some() {
        RecordKind::Reply
    } else if !raw.mentions.is_empty() {
        RecordKind::MentionBearing
    } else {
        RecordKind::Tweet
    };
    let has_profile = raw.followers.is_some()
        || raw.following.is_some()
        || raw.description_len.is_some()
        || raw.account_created_at.is_some();
    Ok(InteractionRecord {
        record_id: raw.tweet_id,
        platform: Platform::X,
        author: raw.user_id,
        created_at,
        kind,
        title: None,
        text: Some(raw.text),
        parent_author: raw.reply_to_user,
        retweeted_author: raw.retweet_of_user,
        mentioned_authors: raw.mentions,
        subreddit: None,
        link_id: None,
        parent_id: None,
        profile: has_profile.then_some(Profile {
            followers: raw.followers,
            following: raw.following,
            description_len: raw.description_len,
            account_created_at: raw.account_created_at,
        }),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedRecords {
    pub records: Vec<InteractionRecord>,
    pub errors: Vec<LineError>,
}

/// Parses newline-delimited records. Malformed lines are reported with their
/// 1-based line number and skipped; blank lines are ignored.
pub fn parse_records<R: BufRead>(reader: R, platform: Platform) -> Result<ParsedRecords> {
    let mut out = ParsedRecords::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let parsed = match platform {
            Platform::Reddit => parse_reddit(trimmed),
            Platform::X => parse_x(trimmed),
        }
        .and_then(|r| r.validate().map(|_| r));
        match parsed {
            Ok(record) => out.records.push(record),
            Err(message) => out.errors.push(LineError { line: i + 1, message }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Reply,
    ReshareSameTitle,
    Retweet,
    Mention,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeEvent {
    pub source: String,
    pub target: String,
    pub timestamp: i64,
    pub relation: Relation,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractRules {
    /// Emit one edge per mentioned user (forecasting mode).
    pub include_mentions: bool,
    /// Restrict same-title reshare matching to the same subreddit.
    pub same_subreddit_only: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    /// Parent/original author missing or a deletion placeholder.
    pub unknown_parent: usize,
    pub self_loops: usize,
}

#[derive(Debug, Clone, Default)]
pub struct EdgeExtraction {
    pub edges: Vec<EdgeEvent>,
    pub skipped: SkipReport,
}

/// Case-folds, trims, and collapses internal whitespace.
pub fn normalize_title(title: &str) -> String {
    title.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

fn is_placeholder_author(name: &str) -> bool {
    let n = name.trim();
    n.is_empty() || n == "[deleted]" || n == "[removed]"
}

/// Derives directed interaction edges from records, processed in timestamp
/// order (stable for ties).
pub fn extract_edges(records: &[InteractionRecord], rules: &ExtractRules) -> EdgeExtraction {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by_key(|&i| records[i].created_at);

    let mut out = EdgeExtraction::default();
    // normalized title (optionally scoped by subreddit) -> authors in first-post order
    let mut title_authors: HashMap<(Option<String>, String), Vec<(String, i64)>> = HashMap::new();

    let push = |out: &mut EdgeExtraction, source: &str, target: &str, ts: i64, relation: Relation| {
        if is_placeholder_author(source) {
            out.skipped.unknown_parent += 1;
        } else if source == target {
            out.skipped.self_loops += 1;
        } else {
            out.edges.push(EdgeEvent {
                source: source.to_string(),
                target: target.to_string(),
                timestamp: ts,
                relation,
            });
        }
    };

    for &i in &order {
        let r = &records[i];
        let actor = r.author.as_str();
        match r.kind {
            RecordKind::Comment | RecordKind::Reply => {
                let parent = r.parent_author.as_deref().unwrap_or("");
                push(&mut out, parent, actor, r.created_at, Relation::Reply);
            }
            RecordKind::Retweet => {
                let original = r.retweeted_author.as_deref().unwrap_or("");
                push(&mut out, original, actor, r.created_at, Relation::Retweet);
            }
            RecordKind::Submission => {
                if let Some(title) = r.title.as_deref() {
                    let norm = normalize_title(title);
                    if !norm.is_empty() {
                        let scope = rules.same_subreddit_only.then(|| r.subreddit.clone()).flatten();
                        let key = (scope, norm);
                        let authors = title_authors.entry(key).or_default();
                        let origin = authors
                            .iter()
                            .find(|(a, ts)| a != actor && *ts < r.created_at)
                            .map(|(a, _)| a.clone());
                        if let Some(origin) = origin {
                            push(&mut out, &origin, actor, r.created_at, Relation::ReshareSameTitle);
                        }
                        if !authors.iter().any(|(a, _)| a == actor) {
                            authors.push((actor.to_string(), r.created_at));
                        }
                    }
                }
            }
            RecordKind::Tweet | RecordKind::MentionBearing => {}
        }
        if rules.include_mentions && r.platform == Platform::X {
            for mentioned in &r.mentioned_authors {
                push(&mut out, mentioned, actor, r.created_at, Relation::Mention);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UserLabel {
    Troll,
    Benign,
}

/// Reads a `user_id,label` CSV (header required) with labels `troll`/`benign`.
pub fn parse_labels<R: std::io::Read>(reader: R) -> Result<BTreeMap<String, UserLabel>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let mut out = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Parse { line: i + 2, message: e.to_string() })?;
        let (Some(user), Some(label)) = (row.get(0), row.get(1)) else {
            return Err(Error::Parse { line: i + 2, message: "expected user_id,label".into() });
        };
        let label = match label.to_ascii_lowercase().as_str() {
            "troll" => UserLabel::Troll,
            "benign" => UserLabel::Benign,
            other => {
                return Err(Error::Parse { line: i + 2, message: format!("unknown label {other:?}") })
            }
        };
        out.insert(user.to_string(), label);
    }
    Ok(out)
}

pub fn write_labels<W: std::io::Write>(labels: &BTreeMap<String, UserLabel>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["user_id", "label"]).map_err(|e| Error::Data(e.to_string()))?;
    for (user, label) in labels {
        let l = match label {
            UserLabel::Troll => "troll",
            UserLabel::Benign => "benign",
        };
        w.write_record([user.as_str(), l]).map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
