//! Driving an external SMT-LIB2 solver over stdin/stdout.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use num_traits::Zero;

use crate::rational::{parse_rational, Rational};
use crate::smt::term::{self, SValue, Term};
use crate::smt::SmtProblem;

pub type Model = HashMap<String, SValue>;

pub const SOLVER_ENV: &str = "UCHECK_SOLVER";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// One query with a native `minimize` directive.
    Optimize,
    /// Plain satisfiability queries, re-asserting `objective < v` until unsat.
    Tighten,
}

impl Profile {
    pub fn parse(s: &str) -> Option<Profile> {
        match s {
            "optimize" | "omt" => Some(Profile::Optimize),
            "tighten" | "plain" | "smt" => Some(Profile::Tighten),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub path: PathBuf,
    pub args: Vec<String>,
    pub profile: Profile,
    /// Wall-clock budget for a whole `solve_optimize` call.
    pub timeout: Duration,
    /// Pass the budget to the solver as `(set-option :timeout ms)` (z3 dialect),
    /// so that an optimizing query can report its best model before being killed.
    pub soft_timeout: bool,
    pub seed: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("no solver found: set {SOLVER_ENV} or put z3 on PATH")]
    NotFound,
    #[error("cannot run solver `{path}`: {source}")]
    Spawn { path: String, source: std::io::Error },
    #[error("solver crashed: {0}")]
    Crash(String),
    #[error("malformed solver output at `{token}`: {msg}")]
    Parse { token: String, msg: String },
    #[error("solver timed out without a model")]
    Timeout,
    #[error("solver model violates the problem: {0}")]
    InvalidModel(String),
}

impl SolverConfig {
    pub fn z3(path: impl Into<PathBuf>) -> Self {
        SolverConfig {
            path: path.into(),
            args: vec!["-in".into()],
            profile: Profile::Optimize,
            timeout: Duration::from_secs(300),
            soft_timeout: true,
            seed: 0,
        }
    }

    /// `$UCHECK_SOLVER`, else `z3` on `PATH`.
    pub fn locate() -> Result<Self, SolverError> {
        if let Some(p) = std::env::var_os(SOLVER_ENV) {
            let p = PathBuf::from(p);
            return if p.is_file() { Ok(Self::z3(p)) } else { find_in_path(&p).map(Self::z3).ok_or(SolverError::NotFound) };
        }
        find_in_path(Path::new("z3")).map(Self::z3).ok_or(SolverError::NotFound)
    }

    pub fn with_profile(mut self, profile: Profile) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn preamble(&self, budget: Duration) -> String {
        let mut s = format!("(set-option :random-seed {})\n", self.seed);
        if self.soft_timeout {
            s.push_str(&format!("(set-option :timeout {})\n", budget.as_millis().max(1)));
        }
        s
    }
}

fn find_in_path(name: &Path) -> Option<PathBuf> {
    if name.components().count() > 1 {
        return name.is_file().then(|| name.to_path_buf());
    }
    std::env::split_paths(&std::env::var_os("PATH")?).map(|d| d.join(name)).find(|p| p.is_file())
}

/// Raw stdout of one solver process fed `script`, or `None` if it was killed
/// at the deadline.
pub fn run_script(cfg: &SolverConfig, script: &str, deadline: Instant) -> Result<Option<String>, SolverError> {
    let spawn_err = |source| SolverError::Spawn { path: cfg.path.display().to_string(), source };
    let mut child = Command::new(&cfg.path)
        .args(&cfg.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(spawn_err)?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = script.to_string();
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(input.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    let status = loop {
        if let Some(st) = child.try_wait().map_err(spawn_err)? {
            break Some(st);
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            break None;
        }
        std::thread::sleep(Duration::from_millis(2));
    };
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();
    match status {
        None => Ok(None),
        Some(st) if !st.success() && !out.trim_start().starts_with("sat") && !out.contains("unsat") => {
            Err(SolverError::Crash(format!("exit status {st}: {}{}", out.trim(), err.trim())))
        }
        Some(_) => Ok(Some(out)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_err(token: &str, msg: &str) -> SolverError {
    SolverError::Parse { token: token.chars().take(60).collect(), msg: msg.to_string() }
}

/// All top-level s-expressions in `text`.
pub fn parse_sexps(text: &str) -> Result<Vec<Sexp>, SolverError> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack.pop().filter(|_| !stack.is_empty()).ok_or_else(|| parse_err(&text[i..], "unbalanced `)`"))?;
                stack.last_mut().unwrap().push(Sexp::List(done));
            }
            ';' => {
                while chars.peek().is_some_and(|&(_, c)| c != '\n') {
                    chars.next();
                }
            }
            '"' => {
                let start = i;
                let mut end = None;
                while let Some((j, c)) = chars.next() {
                    if c == '"' {
                        if chars.peek().is_some_and(|&(_, c)| c == '"') {
                            chars.next();
                            continue;
                        }
                        end = Some(j);
                        break;
                    }
                }
                let end = end.ok_or_else(|| parse_err(&text[start..], "unterminated string"))?;
                stack.last_mut().unwrap().push(Sexp::Atom(text[start..=end].to_string()));
            }
            c if c.is_whitespace() => {}
            _ => {
                let mut end = i + c.len_utf8();
                while let Some(&(j, c)) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' {
                        break;
                    }
                    end = j + c.len_utf8();
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(text[i..end].to_string()));
            }
        }
    }
    if stack.len() != 1 {
        return Err(parse_err(text.trim_end().rsplit('\n').next().unwrap_or(""), "unbalanced `(`"));
    }
    Ok(stack.pop().unwrap())
}

fn value_of(e: &Sexp) -> Result<SValue, SolverError> {
    match e {
        Sexp::Atom(a) if a == "true" => Ok(SValue::Bool(true)),
        Sexp::Atom(a) if a == "false" => Ok(SValue::Bool(false)),
        Sexp::Atom(a) => parse_rational(a).map(SValue::Num).map_err(|_| parse_err(a, "not a value")),
        Sexp::List(xs) => {
            let num = |x: &Sexp| -> Result<Rational, SolverError> {
                match value_of(x)? {
                    SValue::Num(q) => Ok(q),
                    SValue::Bool(_) => Err(parse_err(&render(x), "expected a number")),
                }
            };
            match xs.as_slice() {
                [Sexp::Atom(op), a] if op == "-" => Ok(SValue::Num(-num(a)?)),
                [Sexp::Atom(op), a] if op == "to_real" || op == "+" => Ok(SValue::Num(num(a)?)),
                [Sexp::Atom(op), a, b] if op == "/" => {
                    let d = num(b)?;
                    if d.is_zero() {
                        return Err(parse_err(&render(e), "division by zero"));
                    }
                    Ok(SValue::Num(num(a)? / d))
                }
                _ => Err(parse_err(&render(e), "unsupported value form")),
            }
        }
    }
}

fn render(e: &Sexp) -> String {
    match e {
        Sexp::Atom(a) => a.clone(),
        Sexp::List(xs) => format!("({})", xs.iter().map(render).collect::<Vec<_>>().join(" ")),
    }
}

/// Parses a `get-value` response such as `((d_2_9 (/ 41 20)) (drop_1 false))`.
pub fn parse_model(text: &str) -> Result<Model, SolverError> {
    let sexps = parse_sexps(text)?;
    let [Sexp::List(pairs)] = sexps.as_slice() else {
        return Err(parse_err(text.trim(), "expected one list of (name value) pairs"));
    };
    let mut model = Model::new();
    for p in pairs {
        match p {
            Sexp::List(kv) if kv.len() == 2 => {
                let Sexp::Atom(name) = &kv[0] else {
                    return Err(parse_err(&render(p), "expected a symbol"));
                };
                model.insert(name.clone(), value_of(&kv[1])?);
            }
            _ => return Err(parse_err(&render(p), "expected (name value)")),
        }
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
}

/// Status line and, when sat (or unknown with values), the model.
fn parse_response(out: &str) -> Result<(Status, Option<Model>), SolverError> {
    let sexps = parse_sexps(out)?;
    let mut it = sexps.iter();
    let status = match it.next() {
        Some(Sexp::Atom(a)) if a == "sat" => Status::Sat,
        Some(Sexp::Atom(a)) if a == "unsat" => return Ok((Status::Unsat, None)),
        Some(Sexp::Atom(a)) if a == "unknown" => Status::Unknown,
        Some(other) => return Err(SolverError::Crash(format!("unexpected response {}", render(other)))),
        None => return Err(parse_err("", "empty response")),
    };
    let model = match it.next() {
        Some(v @ Sexp::List(xs)) if !matches!(xs.first(), Some(Sexp::Atom(a)) if a == "error") => {
            Some(parse_model(&render(v))?)
        }
        Some(Sexp::List(xs)) if status == Status::Sat => {
            return Err(SolverError::Crash(xs.iter().map(render).collect::<Vec<_>>().join(" ")))
        }
        _ => None,
    };
    if status == Status::Sat && model.is_none() {
        return Err(parse_err(out.trim(), "sat without a model"));
    }
    Ok((status, model))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: Status,
    pub model: Option<Model>,
    pub objective: Option<Rational>,
    /// False when the budget ran out before optimality was established.
    pub complete: bool,
    pub queries: usize,
    pub elapsed: Duration,
}

fn verified(problem: &SmtProblem, model: Model) -> Result<(Model, Rational), SolverError> {
    problem.check_model(&model).map_err(SolverError::InvalidModel)?;
    let v = problem.objective_value(&model).map_err(|e| SolverError::InvalidModel(e.to_string()))?;
    Ok((model, v))
}

/// Satisfiability of the problem's constraints (objective ignored).
pub fn check_sat(problem: &SmtProblem, cfg: &SolverConfig) -> Result<Option<Model>, SolverError> {
    let deadline = Instant::now() + cfg.timeout;
    let script = cfg.preamble(cfg.timeout) + &problem.to_smtlib(false, &[]);
    let out = run_script(cfg, &script, deadline)?.ok_or(SolverError::Timeout)?;
    match parse_response(&out)? {
        (Status::Sat, Some(m)) => Ok(Some(verified(problem, m)?.0)),
        (Status::Unsat, _) => Ok(None),
        _ => Err(SolverError::Timeout),
    }
}

/// An assignment minimizing the problem's objective. Every returned model has
/// been re-checked against all assertions.
pub fn solve_optimize(problem: &SmtProblem, cfg: &SolverConfig) -> Result<SolveOutcome, SolverError> {
    let start = Instant::now();
    let deadline = start + cfg.timeout;
    match cfg.profile {
        Profile::Optimize => {
            let script = cfg.preamble(cfg.timeout) + &problem.to_smtlib(true, &[]);
            let out = run_script(cfg, &script, deadline + Duration::from_secs(2))?;
            let Some(out) = out else {
                return Err(SolverError::Timeout);
            };
            let (status, model) = parse_response(&out)?;
            let complete = status != Status::Unknown;
            let (model, objective) = match model {
                Some(m) => {
                    let (m, v) = verified(problem, m)?;
                    (Some(m), Some(v))
                }
                None if status == Status::Unknown => return Err(SolverError::Timeout),
                None => (None, None),
            };
            let status = if status == Status::Unknown && model.is_some() { Status::Sat } else { status };
            Ok(SolveOutcome { status, model, objective, complete, queries: 1, elapsed: start.elapsed() })
        }
        Profile::Tighten => {
            let obj = problem.objective.clone().unwrap_or(Term::Real(Rational::zero()));
            let mut best: Option<(Model, Rational)> = None;
            let mut queries = 0;
            loop {
                let now = Instant::now();
                if now >= deadline {
                    break;
                }
                let extra: Vec<Term> =
                    best.iter().map(|(_, v)| term::lt(obj.clone(), Term::Real(v.clone()))).collect();
                let script = cfg.preamble(deadline - now) + &problem.to_smtlib(false, &extra);
                queries += 1;
                let Some(out) = run_script(cfg, &script, deadline)? else {
                    break;
                };
                match parse_response(&out)? {
                    (Status::Sat, Some(m)) => {
                        let (m, v) = verified(problem, m)?;
                        if best.as_ref().is_some_and(|(_, b)| v >= *b) {
                            return Err(SolverError::InvalidModel("tightening did not decrease".into()));
                        }
                        best = Some((m, v));
                    }
                    (Status::Unsat, _) => {
                        let elapsed = start.elapsed();
                        return Ok(match best {
                            Some((m, v)) => SolveOutcome {
                                status: Status::Sat,
                                model: Some(m),
                                objective: Some(v),
                                complete: true,
                                queries,
                                elapsed,
                            },
                            None => SolveOutcome {
                                status: Status::Unsat,
                                model: None,
                                objective: None,
                                complete: true,
                                queries,
                                elapsed,
                            },
                        });
                    }
                    _ => break,
                }
            }
            match best {
                Some((m, v)) => Ok(SolveOutcome {
                    status: Status::Sat,
                    model: Some(m),
                    objective: Some(v),
                    complete: false,
                    queries,
                    elapsed: start.elapsed(),
                }),
                None => Err(SolverError::Timeout),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn parses_values() {
        let m = parse_model("((d_2_9 (/ 41 20)))").unwrap();
        assert_eq!(m["d_2_9"], SValue::Num(ratio(41, 20)));
        let m = parse_model("((drop_e1 false) (a (- 3.0))\n (b (/ 41.0 20.0)) (c 2.5) (d (- (/ 1.0 2.0))) (e 7))")
            .unwrap();
        assert_eq!(m["drop_e1"], SValue::Bool(false));
        assert_eq!(m["a"], SValue::Num(int(-3)));
        assert_eq!(m["b"], SValue::Num(ratio(41, 20)));
        assert_eq!(m["c"], SValue::Num(ratio(5, 2)));
        assert_eq!(m["d"], SValue::Num(ratio(-1, 2)));
        assert_eq!(m["e"], SValue::Num(int(7)));
    }

    #[test]
    fn rejects_malformed_models() {
        assert!(parse_model("").is_err());
        assert!(parse_model("((a (/ 1 0)))").is_err());
        assert!(parse_model("((a (* 2 3)))").is_err());
        assert!(parse_model("((a 1)").is_err());
        match parse_model("((a foo))") {
            Err(SolverError::Parse { token, .. }) => assert_eq!(token, "foo"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn response_statuses() {
        assert_eq!(parse_response("unsat\n(error \"line 9: model is not available\")\n").unwrap().0, Status::Unsat);
        let (s, m) = parse_response("sat\n((x 3.0))\n").unwrap();
        assert_eq!(s, Status::Sat);
        assert_eq!(m.unwrap()["x"], SValue::Num(int(3)));
        assert!(parse_response("sat\n").is_err());
        assert_eq!(parse_response("unknown\n(error \"no model\")").unwrap(), (Status::Unknown, None));
    }

    #[test]
    fn comments_and_strings_in_sexps() {
        let s = parse_sexps("; hi\n(a \"b ) c\" d)").unwrap();
        assert_eq!(
            s,
            vec![Sexp::List(vec![Sexp::Atom("a".into()), Sexp::Atom("\"b ) c\"".into()), Sexp::Atom("d".into())])]
        );
    }

    #[test]
    fn missing_solver_is_a_spawn_error() {
        let cfg = SolverConfig::z3("/nonexistent/z3");
        let err = run_script(&cfg, "(check-sat)", Instant::now() + Duration::from_secs(1)).unwrap_err();
        assert!(matches!(err, SolverError::Spawn { .. }));
    }
}
