//! Repository selection thresholds and where repository metadata comes from.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize};

use super::AnalyzeError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionCriteria {
    pub min_stars: u64,
    pub min_contributors: u64,
    /// Repositories last updated on or after this date qualify.
    pub updated_after: NaiveDate,
}

impl Default for SelectionCriteria {
    fn default() -> Self {
        SelectionCriteria {
            min_stars: 40,
            min_contributors: 15,
            updated_after: NaiveDate::from_ymd_opt(2023, 1, 1).expect("valid date"),
        }
    }
}

impl SelectionCriteria {
    pub fn load(path: &Path) -> Result<Self, MetadataError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Accepts `YYYY-MM-DD` or any timestamp starting with one.
fn lenient_date<'de, D: Deserializer<'de>>(d: D) -> Result<Option<NaiveDate>, D::Error> {
    let raw: Option<String> = Option::deserialize(d)?;
    raw.map(|s| {
        let day = s.get(..10).unwrap_or(&s);
        NaiveDate::parse_from_str(day, "%Y-%m-%d").map_err(serde::de::Error::custom)
    })
    .transpose()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoMetadata {
    pub name: String,
    #[serde(default)]
    pub stars: Option<u64>,
    #[serde(default)]
    pub contributors: Option<u64>,
    #[serde(default, deserialize_with = "lenient_date")]
    pub updated_at: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "criterion", rename_all = "snake_case")]
pub enum SelectionFailure {
    MinStars { required: u64, actual: u64 },
    MinContributors { required: u64, actual: u64 },
    UpdatedAfter { required: NaiveDate, actual: NaiveDate },
}

impl std::fmt::Display for SelectionFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SelectionFailure::MinStars { required, actual } => write!(f, "min_stars: {actual} < {required}"),
            SelectionFailure::MinContributors { required, actual } => {
                write!(f, "min_contributors: {actual} < {required}")
            }
            SelectionFailure::UpdatedAfter { required, actual } => {
                write!(f, "updated_after: last update {actual} is before {required}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub repo: String,
    pub passed: bool,
    pub failures: Vec<SelectionFailure>,
}

pub fn check_selection(meta: &RepoMetadata, criteria: &SelectionCriteria) -> Result<SelectionOutcome, AnalyzeError> {
    let stars = meta.stars.ok_or(AnalyzeError::MissingField("stars"))?;
    let contributors = meta.contributors.ok_or(AnalyzeError::MissingField("contributors"))?;
    let updated = meta.updated_at.ok_or(AnalyzeError::MissingField("updated_at"))?;
    let mut failures = Vec::new();
    if stars < criteria.min_stars {
        failures.push(SelectionFailure::MinStars {
            required: criteria.min_stars,
            actual: stars,
        });
    }
    if contributors < criteria.min_contributors {
        failures.push(SelectionFailure::MinContributors {
            required: criteria.min_contributors,
            actual: contributors,
        });
    }
    if updated < criteria.updated_after {
        failures.push(SelectionFailure::UpdatedAfter {
            required: criteria.updated_after,
            actual: updated,
        });
    }
    Ok(SelectionOutcome {
        repo: meta.name.clone(),
        passed: failures.is_empty(),
        failures,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum MetadataError {
    #[error("failed to read metadata: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid metadata: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("no metadata for repository {0}")]
    UnknownRepo(String),
    #[error("hosting API request failed: {0}")]
    Http(String),
}

/// Supplies stars, contributor counts and last-update dates.
pub trait MetadataSource {
    fn metadata(&self, repo: &str) -> Result<RepoMetadata, MetadataError>;
}

/// Metadata read from a JSON file holding one record or a list of records.
#[derive(Debug, Clone, Default)]
pub struct LocalMetadata {
    records: BTreeMap<String, RepoMetadata>,
}

impl LocalMetadata {
    pub fn from_records(records: Vec<RepoMetadata>) -> Self {
        LocalMetadata {
            records: records.into_iter().map(|r| (r.name.clone(), r)).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, MetadataError> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum File {
            Many(Vec<RepoMetadata>),
            One(RepoMetadata),
        }
        let records = match serde_json::from_str(&std::fs::read_to_string(path)?)? {
            File::Many(v) => v,
            File::One(r) => vec![r],
        };
        Ok(Self::from_records(records))
    }
}

impl MetadataSource for LocalMetadata {
    fn metadata(&self, repo: &str) -> Result<RepoMetadata, MetadataError> {
        self.records
            .get(repo)
            .cloned()
            .ok_or_else(|| MetadataError::UnknownRepo(repo.to_string()))
    }
}

/// GitHub REST client; `repo` is `owner/name`.
pub struct GitHubMetadata {
    api_base: String,
    token: Option<String>,
    http: reqwest::blocking::Client,
}

impl GitHubMetadata {
    pub fn new(api_base: impl Into<String>, token: Option<String>) -> Result<Self, MetadataError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .user_agent("satd-toolchain")
            .build()
            .map_err(|e| MetadataError::Http(e.to_string()))?;
        Ok(GitHubMetadata {
            api_base: api_base.into().trim_end_matches('/').to_string(),
            token,
            http,
        })
    }

    fn get(&self, path: &str) -> Result<reqwest::blocking::Response, MetadataError> {
        let mut request = self.http.get(format!("{}{path}", self.api_base));
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request.send().map_err(|e| MetadataError::Http(e.to_string()))?;
        if !response.status().is_success() {
            return Err(MetadataError::Http(format!("{path}: HTTP {}", response.status().as_u16())));
        }
        Ok(response)
    }
}

/// Page number of the `rel="last"` link in a `Link` header.
fn last_page(link: &str) -> Option<u64> {
    link.split(',')
        .find(|part| part.contains("rel=\"last\""))
        .and_then(|part| {
            let url = part.split(['<', '>']).nth(1)?;
            url.split(['?', '&'])
                .find_map(|kv| kv.strip_prefix("page="))
                .and_then(|p| p.parse().ok())
        })
}

impl MetadataSource for GitHubMetadata {
    fn metadata(&self, repo: &str) -> Result<RepoMetadata, MetadataError> {
        #[derive(Deserialize)]
        struct Repo {
            stargazers_count: u64,
            #[serde(deserialize_with = "lenient_date")]
            pushed_at: Option<NaiveDate>,
        }
        let info: Repo = self
            .get(&format!("/repos/{repo}"))?
            .json()
            .map_err(|e| MetadataError::Http(e.to_string()))?;
        // One contributor per page: the last page number is the count.
        let response = self.get(&format!("/repos/{repo}/contributors?per_page=1&anon=1"))?;
        let from_link = response
            .headers()
            .get("link")
            .and_then(|v| v.to_str().ok())
            .and_then(last_page);
        let contributors = match from_link {
            Some(n) => n,
            None => response
                .json::<Vec<serde_json::Value>>()
                .map_err(|e| MetadataError::Http(e.to_string()))?
                .len() as u64,
        };
        Ok(RepoMetadata {
            name: repo.to_string(),
            stars: Some(info.stargazers_count),
            contributors: Some(contributors),
            updated_at: info.pushed_at,
        })
    }
}
