//! Slow, obviously-correct reference implementations used to check the
//! library. None of these call into `laysumm`.

/// F1 from a match count and the two totals; zero when either side is empty.
pub fn f1(matches: usize, candidate_total: usize, reference_total: usize) -> f64 {
    if matches == 0 || candidate_total == 0 || reference_total == 0 {
        return 0.0;
    }
    let p = matches as f64 / candidate_total as f64;
    let r = matches as f64 / reference_total as f64;
    2.0 * p * r / (p + r)
}

fn ngrams<T: Clone>(tokens: &[T], n: usize) -> Vec<Vec<T>> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n)
        .map(|i| tokens[i..i + n].to_vec())
        .collect()
}

/// ROUGE-N F1 by greedy multiset matching: every candidate n-gram consumes
/// one equal reference n-gram if any is left.
pub fn rouge_n_f1<T: Clone + PartialEq>(candidate: &[T], reference: &[T], n: usize) -> f64 {
    let cand = ngrams(candidate, n);
    let mut pool = ngrams(reference, n);
    let reference_total = pool.len();
    let mut matches = 0;
    for gram in &cand {
        if let Some(i) = pool.iter().position(|g| g == gram) {
            pool.swap_remove(i);
            matches += 1;
        }
    }
    f1(matches, cand.len(), reference_total)
}

fn is_subsequence<T: PartialEq>(needle: &[&T], hay: &[T]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|x| it.any(|y| y == *x))
}

/// LCS length by trying every subsequence of `a`. Exponential; keep `a` short.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    assert!(a.len() <= 16, "exhaustive LCS oracle needs a short input");
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let picked: Vec<&T> = (0..a.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| &a[i])
            .collect();
        if is_subsequence(&picked, b) {
            best = size;
        }
    }
    best
}

pub fn rouge_l_f1<T: PartialEq>(candidate: &[T], reference: &[T]) -> f64 {
    f1(
        lcs_len(candidate, reference),
        candidate.len(),
        reference.len(),
    )
}

/// One candidate's raw metrics, columns in a fixed order shared by the pool.
#[derive(Debug, Clone)]
pub struct Row {
    pub id: String,
    pub readability: Vec<f64>,
    pub factuality: Vec<f64>,
}

/// Column-wise scaling to [0, 1]. Lower raw readability is better, so those
/// columns are scaled as `(max - v) / (max - min)`. Constant columns map to 0.5.
fn scale(column: &[f64], lower_is_better: bool) -> Vec<f64> {
    let max = column.iter().cloned().fold(f64::MIN, f64::max);
    let min = column.iter().cloned().fold(f64::MAX, f64::min);
    column
        .iter()
        .map(|&v| {
            if max == min {
                0.5
            } else if lower_is_better {
                (max - v) / (max - min)
            } else {
                (v - min) / (max - min)
            }
        })
        .collect()
}

fn columns(rows: &[Row], pick: impl Fn(&Row) -> &Vec<f64>, lower: bool) -> Vec<Vec<f64>> {
    let width = pick(&rows[0]).len();
    let scaled: Vec<Vec<f64>> = (0..width)
        .map(|j| scale(&rows.iter().map(|r| pick(r)[j]).collect::<Vec<_>>(), lower))
        .collect();
    (0..rows.len())
        .map(|i| scaled.iter().map(|c| c[i]).collect())
        .collect()
}

fn avg(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct Scored {
    pub readability: Vec<Vec<f64>>,
    pub factuality: Vec<Vec<f64>>,
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    pub s: Vec<f64>,
    pub winner: usize,
}

pub fn des(rows: &[Row], w_r: f64, w_f: f64) -> Scored {
    let readability = columns(rows, |r| &r.readability, true);
    let factuality = columns(rows, |r| &r.factuality, false);
    let r: Vec<f64> = readability.iter().map(|v| avg(v)).collect();
    let f: Vec<f64> = factuality.iter().map(|v| avg(v)).collect();
    let s: Vec<f64> = r.iter().zip(&f).map(|(r, f)| w_r * r + w_f * f).collect();
    let winner = argmax(&s);
    Scored {
        readability,
        factuality,
        r,
        f,
        s,
        winner,
    }
}

/// First index holding the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Ranks by the plain mean of all scaled columns, ties by id.
pub fn rank_flat(rows: &[Row]) -> Vec<(String, f64)> {
    let readability = columns(rows, |r| &r.readability, true);
    let factuality = columns(rows, |r| &r.factuality, false);
    let mut out: Vec<(String, f64)> = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let all: Vec<f64> = readability[i]
                .iter()
                .chain(&factuality[i])
                .copied()
                .collect();
            (row.id.clone(), avg(&all))
        })
        .collect();
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    out
}

/// The three-candidate example pool, readability columns (fkgl, dcrs, cli)
/// and factuality columns (alignscore, summac).
pub fn worked_example() -> Vec<Row> {
    let row = |id: &str, r: [f64; 3], f: [f64; 2]| Row {
        id: id.into(),
        readability: r.to_vec(),
        factuality: f.to_vec(),
    };
    vec![
        row("C1", [10.0, 8.0, 12.0], [0.6, 0.5]),
        row("C2", [12.0, 9.0, 14.0], [0.8, 0.7]),
        row("C3", [14.0, 10.0, 13.0], [0.7, 0.6]),
    ]
}
