//! `a:b:n` grid arguments.

use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub a: f64,
    pub b: f64,
    /// Third field: point count for t and κ grids, step for strike grids.
    pub third: f64,
}

impl Grid {
    pub fn parse(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid \"{s}\" must look like a:b:n"));
        }
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("grid \"{s}\": {e}"));
        let g = Grid { a: num(parts[0])?, b: num(parts[1])?, third: num(parts[2])? };
        if !(g.third > 0.0) || !(g.b >= g.a) {
            return Err(format!("grid \"{s}\" needs a <= b and a positive third field"));
        }
        Ok(g)
    }

    fn count(&self) -> Result<usize, String> {
        match self.third.round() as usize {
            0 => Err("grid needs at least one point".into()),
            n => Ok(n),
        }
    }

    pub fn step(&self) -> f64 {
        self.third
    }

    pub fn log_points(&self) -> Result<Vec<f64>, String> {
        if !(self.a > 0.0) {
            return Err("log-spaced grids need a > 0".into());
        }
        let n = self.count()?;
        if n == 1 {
            return Ok(vec![self.a]);
        }
        let (la, lb) = (self.a.ln(), self.b.ln());
        let mut v: Vec<f64> = (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect();
        (v[0], v[n - 1]) = (self.a, self.b);
        Ok(v)
    }

    pub fn linear_points(&self) -> Result<Vec<f64>, String> {
        let n = self.count()?;
        if n == 1 {
            return Ok(vec![self.a]);
        }
        Ok((0..n).map(|i| self.a + (self.b - self.a) * i as f64 / (n - 1) as f64).collect())
    }
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|e| format!("bad list entry \"{x}\": {e}")))
        .collect()
}
