//! World-frame tree database with vote counting.
//!
//! Observations are moved into the world frame with the robot pose, then
//! each one is matched greedily to the nearest stored tree. A match inside
//! the association gate refines that tree's running mean and casts a vote;
//! anything else becomes a new tree.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::TreeObservation;
use crate::geometry::{normalize_angle, Point2};
use crate::Scalar;

pub type TreeId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotPose<T> {
    pub x: T,
    pub y: T,
    pub z: T,
    pub yaw: T,
}

impl<T: Scalar> RobotPose<T> {
    /// Yaw is normalized into (−π, π].
    pub fn new(x: T, y: T, z: T, yaw: T) -> Self {
        Self {
            x,
            y,
            z,
            yaw: normalize_angle(yaw),
        }
    }

    pub fn position(&self) -> Point2<T> {
        Point2::new(self.x, self.y)
    }
}

/// Rotates a sensor-frame point by the pose yaw and translates it by the
/// pose position. The scanner frame and body frame coincide.
pub fn to_world<T: Scalar>(point: Point2<T>, pose: &RobotPose<T>) -> Point2<T> {
    point.rotate(pose.yaw) + pose.position()
}

/// Inverse of [`to_world`].
pub fn to_body<T: Scalar>(point: Point2<T>, pose: &RobotPose<T>) -> Point2<T> {
    (point - pose.position()).rotate(-pose.yaw)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tree<T> {
    pub id: TreeId,
    pub x: T,
    pub y: T,
    pub r: T,
    pub votes: u32,
    pub labeled: bool,
}

impl<T: Scalar> Tree<T> {
    pub fn position(&self) -> Point2<T> {
        Point2::new(self.x, self.y)
    }

    pub fn diameter(&self) -> T {
        self.r * T::lit(2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct UpdateSummary {
    pub matched: usize,
    pub inserted: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DbError {
    #[error("no tree with id {0}")]
    UnknownId(TreeId),
    #[error("association gate must be positive")]
    BadGate,
    #[error("malformed database snapshot: {0}")]
    Snapshot(String),
}

/// JSON snapshot layout: `{"trees":[...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Snapshot<T> {
    trees: Vec<Tree<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeDatabase<T> {
    /// Kept in ascending id order.
    trees: Vec<Tree<T>>,
    thre_dist: T,
    next_id: TreeId,
}

impl<T: Scalar> TreeDatabase<T> {
    pub fn new(thre_dist: T) -> Result<Self, DbError> {
        if !(thre_dist > T::zero()) {
            return Err(DbError::BadGate);
        }
        Ok(Self {
            trees: Vec::new(),
            thre_dist,
            next_id: 1,
        })
    }

    pub fn thre_dist(&self) -> T {
        self.thre_dist
    }

    pub fn trees(&self) -> &[Tree<T>] {
        &self.trees
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn get(&self, id: TreeId) -> Option<&Tree<T>> {
        self.trees
            .binary_search_by_key(&id, |t| t.id)
            .ok()
            .map(|i| &self.trees[i])
    }

    pub fn total_votes(&self) -> u64 {
        self.trees.iter().map(|t| u64::from(t.votes)).sum()
    }

    /// Nearest tree by center distance; ties go to the lower id.
    pub fn nearest_tree(&self, point: Point2<T>) -> Option<&Tree<T>> {
        self.nearest_index(point).map(|i| &self.trees[i])
    }

    fn nearest_index(&self, point: Point2<T>) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for (i, t) in self.trees.iter().enumerate() {
            let d = t.position().distance(point);
            // strict comparison keeps the earlier (lower id) tree on ties
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Inserts a tree with one vote and returns its id.
    pub fn insert(&mut self, position: Point2<T>, r: T) -> TreeId {
        let id = self.next_id;
        self.next_id += 1;
        self.trees.push(Tree {
            id,
            x: position.x,
            y: position.y,
            r,
            votes: 1,
            labeled: false,
        });
        id
    }

    /// Processes one scan's observations in order.
    pub fn update(&mut self, observations: &[TreeObservation<T>], pose: &RobotPose<T>) -> UpdateSummary {
        let mut summary = UpdateSummary::default();
        for obs in observations {
            let world = to_world(obs.center, pose);
            match self.nearest_index(world) {
                Some(i) if self.trees[i].position().distance(world) < self.thre_dist => {
                    let tree = &mut self.trees[i];
                    let n = T::lit(f64::from(tree.votes) + 1.0);
                    tree.x = tree.x + (world.x - tree.x) / n;
                    tree.y = tree.y + (world.y - tree.y) / n;
                    tree.r = tree.r + (obs.radius - tree.r) / n;
                    tree.votes += 1;
                    summary.matched += 1;
                }
                _ => {
                    self.insert(world, obs.radius);
                    summary.inserted += 1;
                }
            }
        }
        summary
    }

    /// Trees with at least `min_votes` votes, by id.
    pub fn confirmed_trees(&self, min_votes: u32) -> Vec<&Tree<T>> {
        self.trees.iter().filter(|t| t.votes >= min_votes).collect()
    }

    /// Marks `id` as the labeled tree, clearing any previous label.
    pub fn mark_labeled(&mut self, id: TreeId) -> Result<(), DbError> {
        if self.get(id).is_none() {
            return Err(DbError::UnknownId(id));
        }
        for t in &mut self.trees {
            t.labeled = t.id == id;
        }
        Ok(())
    }

    pub fn labeled(&self) -> Option<&Tree<T>> {
        self.trees.iter().find(|t| t.labeled)
    }
}

impl<T: Scalar + Serialize> TreeDatabase<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&Snapshot {
            trees: self.trees.clone(),
        })
        .expect("tree snapshot serializes")
    }

    /// `id,x,y,diameter,votes,labeled`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,x,y,diameter,votes,labeled\n");
        for t in &self.trees {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{},{}",
                t.id,
                t.x,
                t.y,
                t.diameter(),
                t.votes,
                t.labeled
            );
        }
        out
    }
}

impl<T: Scalar + for<'de> Deserialize<'de>> TreeDatabase<T> {
    /// Loads a JSON snapshot. The gate is not part of the snapshot.
    pub fn from_json(json: &str, thre_dist: T) -> Result<Self, DbError> {
        let snap: Snapshot<T> = serde_json::from_str(json).map_err(|e| DbError::Snapshot(e.to_string()))?;
        let mut db = Self::new(thre_dist)?;
        let mut trees = snap.trees;
        trees.sort_by_key(|t| t.id);
        if trees.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(DbError::Snapshot("duplicate tree id".into()));
        }
        if trees.iter().filter(|t| t.labeled).count() > 1 {
            return Err(DbError::Snapshot("more than one labeled tree".into()));
        }
        if let Some(t) = trees.iter().find(|t| !(t.r > T::zero()) || t.votes == 0) {
            return Err(DbError::Snapshot(format!("tree {} has bad radius or zero votes", t.id)));
        }
        db.next_id = trees.last().map_or(1, |t| t.id + 1);
        db.trees = trees;
        Ok(db)
    }
}
