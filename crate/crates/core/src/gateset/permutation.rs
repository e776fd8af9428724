use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A permutation of `{0, .., d-1}` stored by images: `image[i] = σ(i)`.
///
/// Composition follows function composition, `(a ∘ b)(i) = a(b(i))`, and the
/// matrix convention is `P(σ)|i⟩ = |σ(i)⟩`, so `P(a ∘ b) = P(a) P(b)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn identity(degree: usize) -> Self {
        Self {
            image: (0..degree).collect(),
        }
    }

    pub fn from_image(image: Vec<usize>) -> Result<Self> {
        let d = image.len();
        let mut seen = vec![false; d];
        for &x in &image {
            if x >= d || seen[x] {
                return Err(Error::InvalidParameter(format!(
                    "{image:?} is not a permutation of 0..{d}"
                )));
            }
            seen[x] = true;
        }
        Ok(Self { image })
    }

    /// Builds a permutation from 1-indexed cycles, e.g. `[[1, 2, 3]]` for `(123)`.
    pub fn from_cycles(degree: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut image: Vec<usize> = (0..degree).collect();
        let mut used = vec![false; degree];
        for cycle in cycles {
            for (k, &x) in cycle.iter().enumerate() {
                if x == 0 || x > degree || used[x - 1] {
                    return Err(Error::Parse(format!("bad cycle {cycle:?} for degree {degree}")));
                }
                used[x - 1] = true;
                let next = cycle[(k + 1) % cycle.len()];
                if next == 0 || next > degree {
                    return Err(Error::Parse(format!("bad cycle {cycle:?} for degree {degree}")));
                }
                image[x - 1] = next - 1;
            }
        }
        Self::from_image(image)
    }

    pub fn degree(&self) -> usize {
        self.image.len()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.degree(), other.degree(), "permutation degrees differ");
        Self {
            image: other.image.iter().map(|&i| self.image[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.degree()];
        for (i, &x) in self.image.iter().enumerate() {
            inv[x] = i;
        }
        Self { image: inv }
    }

    pub fn fixed_points(&self) -> usize {
        self.image.iter().enumerate().filter(|(i, x)| i == *x).count()
    }

    /// Non-trivial cycles, 0-indexed, each starting at its smallest element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.degree()];
        let mut out = Vec::new();
        for start in 0..self.degree() {
            if seen[start] || self.image[start] == start {
                seen[start] = true;
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut x = self.image[start];
            while x != start {
                seen[x] = true;
                cycle.push(x);
                x = self.image[x];
            }
            out.push(cycle);
        }
        out
    }

    /// Cycle type as a partition of the degree, in decreasing order.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut parts: Vec<usize> = self.cycles().iter().map(Vec::len).collect();
        parts.extend(std::iter::repeat_n(1, self.fixed_points()));
        parts.sort_unstable_by(|a, b| b.cmp(a));
        parts
    }

    /// All permutations of `degree` points, lexicographic in the image tuple.
    pub fn all(degree: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut current: Vec<usize> = (0..degree).collect();
        loop {
            out.push(Self {
                image: current.clone(),
            });
            // next lexicographic permutation
            let Some(i) = (1..degree).rev().find(|&i| current[i - 1] < current[i]) else {
                break;
            };
            let j = (i..degree).rev().find(|&j| current[j] > current[i - 1]).unwrap();
            current.swap(i - 1, j);
            current[i..].reverse();
        }
        out
    }

    /// Permutations ordered by the arrangement they produce when acting on
    /// the ordered list `(0, .., d-1)`, i.e. by the image tuple of the
    /// inverse. For three points this is `e, (23), (12), (132), (123), (13)`.
    pub fn by_arrangement(degree: usize) -> Vec<Self> {
        Self::all(degree).into_iter().map(|p| p.inverse()).collect()
    }
}

impl fmt::Display for Permutation {
    /// 1-indexed cycle notation; `e` for the identity.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "e");
        }
        let sep = if self.degree() > 9 { " " } else { "" };
        for c in cycles {
            let body: Vec<String> = c.iter().map(|x| (x + 1).to_string()).collect();
            write!(f, "({})", body.join(sep))?;
        }
        Ok(())
    }
}

/// Parses cycle notation for a given degree, e.g. `"(12)(34)"`, `"(1 10)"`, `"e"`.
pub fn parse_cycles(text: &str, degree: usize) -> Result<Permutation> {
    let text = text.trim();
    if text == "e" || text.is_empty() {
        return Ok(Permutation::identity(degree));
    }
    let mut cycles = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let rest_trim = rest.trim_start();
        let Some(body_start) = rest_trim.strip_prefix('(') else {
            return Err(Error::Parse(format!("expected '(' in cycle notation '{text}'")));
        };
        let end = body_start
            .find(')')
            .ok_or_else(|| Error::Parse(format!("unclosed cycle in '{text}'")))?;
        let body = &body_start[..end];
        let points: Vec<usize> = if body.contains(' ') || body.contains(',') {
            body.split([' ', ','])
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<usize>().map_err(|e| Error::Parse(e.to_string())))
                .collect::<Result<_>>()?
        } else {
            body.chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as usize)
                        .ok_or_else(|| Error::Parse(format!("bad point '{c}' in '{text}'")))
                })
                .collect::<Result<_>>()?
        };
        cycles.push(points);
        rest = body_start[end + 1..].trim_start();
    }
    Permutation::from_cycles(degree, &cycles)
}

impl FromStr for Permutation {
    type Err = Error;

    /// Parses a bracketed image list such as `[1, 0, 2]`.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::Parse(format!("expected [..] image list, got '{s}'")))?;
        let image = inner
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Parse(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::from_image(image)
    }
}
