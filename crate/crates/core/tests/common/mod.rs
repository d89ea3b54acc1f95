#![allow(dead_code)]

use std::path::PathBuf;

use gramtok::analysis::PairRecord;
use gramtok::corpus::CorpusRecord;
use gramtok::{build_rule_vocab, merge_vocabs, BaseVocab, Language, MergedVocab, SourceText};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

pub const GET_EXAMPLE: &str = "def get(a, b):\n    return (a + b) % 2 == 1\n";

/// Operator-precedence pair: parentheses around a subtraction are the only
/// difference, and they stay standalone tokens under the base vocabulary.
pub const PRECEDENCE_WRONG: &str = "def scaled(a, b, c):\n    return abs(a - b * c)\n";
pub const PRECEDENCE_RIGHT: &str = "def scaled(a, b, c):\n    return abs((a - b) * c)\n";

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_base() -> BaseVocab {
    BaseVocab::load(fixture_path("base_vocab.json")).expect("fixture base vocab loads")
}

pub fn vocab_for<'a>(sources: impl IntoIterator<Item = &'a str>) -> MergedVocab {
    let (rules, _) = build_rule_vocab(
        sources.into_iter().map(SourceText::from),
        &Language::python(),
    )
    .expect("fixture corpus has parseable files");
    merge_vocabs("python", fixture_base(), rules)
}

pub fn corpus_records(files: &[(String, String)]) -> Vec<CorpusRecord> {
    files
        .iter()
        .map(|(id, content)| CorpusRecord::new(id.clone(), content.as_bytes()))
        .collect()
}

pub fn write_corpus_dir(dir: &std::path::Path, files: &[(String, String)]) {
    for (name, content) in files {
        let path = dir.join(name);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, content).unwrap();
    }
}

/// Hand-written files covering layout corners the generator does not.
pub const HANDWRITTEN: &[&str] = &[
    "",
    "\n",
    "   \n\t\n",
    "# just a comment\n# and another",
    "x=1",
    "pass",
    GET_EXAMPLE,
    "import os, sys\nfrom . import (a,\n    b as c,\n)\n",
    "x = 1; y = 2;  z = 3\n",
    "total = 1 + \\\n    2 + \\\n    3\n",
    "if a:\n\tif b:\n\t\tpass\n\telse:\n\t\treturn\n",
    "def f(a, /, b, *, c=1, **kw) -> int:\n    '''doc'''\n    return a\n",
    "s = \"\"\"\nmulti\n  line ünïcode ✓\n\"\"\"\n",
    "nombre_año = {'clé': [1, 2.5, 3j], \"名前\": None}\n",
    "λ = lambda *a, **k: (a, k)\n",
    "@a.b(c)\n@d\nclass E(F, metaclass=G):\n    @property\n    def h(self): return self._h\n",
    "async def f():\n    async for x in y:\n        await g(x)\n    async with a as (b, c):\n        pass\n",
    "x = [i * j for i in range(3) if i for j in range(i)]\ny = {k: v for k, v in d.items()}\n",
    "try:\n    pass\nexcept* ValueError as e:\n    raise RuntimeError() from e\n",
    "match cmd:\n    case [x, y, *rest]:\n        pass\n    case {'k': v}:\n        pass\n    case _:\n        pass\n",
    "print(f\"{x!r:>{width}} {y=}\", end='')\r\n",
    "a = b if c else d\r\nwhile not a is not b:\r\n    a -= 1\r\n",
    "def outer():\n    x = 0\n    def inner():\n        nonlocal x\n        def innermost():\n            global y\n            return x, y\n        return innermost\n    return inner\n",
    "with open(p) as f, open(q) as g:\n    data = f.read()[1:-1:2]\n",
    "del a[0], b.c\nassert x, 'msg'\n",
    "x: int = 5\ny: 'list[str]'\n",
    "for i in range(10):\n    if i % 2: continue\n    else: break\nelse:\n    pass\n",
    "print(not x in y, x not in y, x is not y)\n\n\n",
    "def g():\n    yield from range(3)\n    return (yield)\n",
    "r = rb'\\x00\\n' + b\"\\xff\" + u'\\u00e9'\n",
    "x = (  # comment inside parens\n    1,\n    2,  # trailing\n)\n",
    "class A:\n    pass\n\n\n\nclass B(A):\n    '''Doc.'''\n",
    "if x:\n    pass\n# dedented comment\nelif y:\n    pass\n",
    "n = 0x_ff + 0o17 + 0b1010 + 1_000_000 + 1e-3 + .5\n",
    "print(*a, **{'sep': ''})\n",
    "type Point = tuple[float, float]\n",
];

const NAMES: &[&str] = &[
    "x", "y", "total", "count", "items", "result", "value", "données", "名前", "π", "λ_fn",
    "ñ", "_private", "__dunder__", "node", "left", "right", "idx", "acc", "buffer",
];
const FUNCS: &[&str] = &["len", "print", "sorted", "sum", "helper", "compute", "transform", "max"];
const DECORATORS: &[&str] = &["@staticmethod", "@property", "@cache", "@app.route('/x')", "@retry(3, delay=0.5)"];
const COMMENTS: &[&str] = &["# TODO tidy", "# ünïcödé comment ✓", "#no space", "# -*- note -*-", "#"];

struct Gen {
    rng: StdRng,
    indent: String,
}

impl Gen {
    fn pick<'a>(&mut self, items: &[&'a str]) -> &'a str {
        items[self.rng.random_range(0..items.len())]
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn sp(&mut self) -> &'static str {
        ["", " ", " ", "  "][self.rng.random_range(0..4)]
    }

    fn name(&mut self) -> String {
        self.pick(NAMES).to_string()
    }

    fn atom(&mut self) -> String {
        match self.rng.random_range(0..7) {
            0 | 1 => self.name(),
            2 => self.rng.random_range(0..1000).to_string(),
            3 => format!("{:.2}", self.rng.random_range(0..100) as f64 / 7.0),
            4 => ["'s'", "\"dq\"", "f'{x}'", "''", "r'\\d+'", "'ü'"][self.rng.random_range(0..6)].to_string(),
            5 => ["None", "True", "False"][self.rng.random_range(0..3)].to_string(),
            _ => format!("{}.{}", self.name(), self.pick(&["real", "attr", "items"])),
        }
    }

    fn expr(&mut self, depth: u32) -> String {
        if depth == 0 {
            return self.atom();
        }
        let (s1, s2) = (self.sp(), self.sp());
        match self.rng.random_range(0..9) {
            0 => {
                let op = self.pick(&["+", "-", "*", "/", "//", "%", "**", "<<", "&", "|"]);
                format!("{}{s1}{op}{s2}{}", self.expr(depth - 1), self.expr(depth - 1))
            }
            1 => format!("({}{s1})", self.expr(depth - 1)),
            2 => {
                let f = self.pick(FUNCS);
                let args: Vec<String> = (0..self.rng.random_range(0..3)).map(|_| self.expr(depth - 1)).collect();
                format!("{f}({})", args.join(&format!(",{s2}")))
            }
            3 => {
                let op = self.pick(&["<", "<=", "==", "!=", "is", "is not", "in", "not in", ">"]);
                format!("{} {op} {}", self.expr(depth - 1), self.expr(depth - 1))
            }
            4 => format!("[{}{s1}for {} in {}]", self.expr(depth - 1), self.name(), self.expr(depth - 1)),
            5 => format!("{}[{}:{}]", self.name(), self.expr(depth - 1), self.sp()),
            6 => format!("{{{}:{s1}{}}}", self.atom(), self.expr(depth - 1)),
            7 => format!("not {}", self.expr(depth - 1)),
            _ => format!("{} if {} else {}", self.atom(), self.expr(depth - 1), self.atom()),
        }
    }

    fn simple_stmt(&mut self) -> String {
        let e = self.expr(2);
        let s = self.sp();
        match self.rng.random_range(0..6) {
            0 => format!("{}{s}={s}{e}", self.name()),
            1 => format!("{} {}= {e}", self.name(), self.pick(&["+", "-", "*", "|"])),
            2 => format!("{}({e})", self.pick(FUNCS)),
            3 => format!("{}, {} = {}, {}", self.name(), self.name(), self.atom(), self.atom()),
            4 => format!("assert {e}"),
            _ => "pass".to_string(),
        }
    }

    fn line(&mut self, out: &mut Vec<String>, depth: usize, text: String) {
        let mut l = format!("{}{}", self.indent.repeat(depth), text);
        if self.chance(0.15) {
            l.push_str("  ");
            l.push_str(self.pick(COMMENTS));
        } else if self.chance(0.05) {
            l.push(' ');
        }
        out.push(l);
    }

    fn body(&mut self, out: &mut Vec<String>, depth: usize, budget: u32) {
        let n = self.rng.random_range(1..4);
        for _ in 0..n {
            if budget > 0 && self.chance(0.3) {
                self.block(out, depth, budget - 1);
            } else {
                let s = self.simple_stmt();
                self.line(out, depth, s);
            }
            if self.chance(0.1) {
                out.push(String::new());
            }
        }
    }

    fn block(&mut self, out: &mut Vec<String>, depth: usize, budget: u32) {
        match self.rng.random_range(0..9) {
            0 => {
                if self.chance(0.5) {
                    let d = self.pick(DECORATORS).to_string();
                    self.line(out, depth, d);
                }
                let params = ["", "a", "a, b=1", "self, *args, **kw", "x: int, y: str = 'y'"][self.rng.random_range(0..5)];
                let header = format!("def {}({params}){}:", self.pick(FUNCS), if self.chance(0.3) { " -> int" } else { "" });
                self.line(out, depth, header);
                if self.chance(0.3) {
                    self.line(out, depth + 1, "\"\"\"Docstring ✓.\"\"\"".into());
                }
                self.body(out, depth + 1, budget);
                let r = format!("return {}", self.expr(1));
                self.line(out, depth + 1, r);
            }
            1 => {
                let header = format!("class {}{}:", ["Node", "Tree", "Données", "Ω"][self.rng.random_range(0..4)], if self.chance(0.5) { "(Base)" } else { "" });
                self.line(out, depth, header);
                let methods = self.rng.random_range(1..3);
                for _ in 0..methods {
                    if self.chance(0.4) {
                        let d = self.pick(DECORATORS).to_string();
                        self.line(out, depth + 1, d);
                    }
                    let m = format!("def {}(self, {}):", self.pick(FUNCS), self.name());
                    self.line(out, depth + 1, m);
                    if self.chance(0.5) {
                        self.line(out, depth + 2, "def nested(q):".into());
                        self.line(out, depth + 3, "return q".into());
                    }
                    self.body(out, depth + 2, budget.saturating_sub(1));
                }
            }
            2 => {
                let c = format!("if {}:", self.expr(2));
                self.line(out, depth, c);
                self.body(out, depth + 1, budget);
                if self.chance(0.5) {
                    let c = format!("elif {}:", self.expr(1));
                    self.line(out, depth, c);
                    self.body(out, depth + 1, budget);
                }
                if self.chance(0.5) {
                    self.line(out, depth, "else:".into());
                    self.body(out, depth + 1, budget);
                }
            }
            3 => {
                let h = format!("for {} in {}:", self.name(), self.expr(1));
                self.line(out, depth, h);
                self.body(out, depth + 1, budget);
                if self.chance(0.3) {
                    self.line(out, depth + 1, "continue".into());
                }
            }
            4 => {
                let h = format!("while {}:", self.expr(1));
                self.line(out, depth, h);
                self.body(out, depth + 1, budget);
                self.line(out, depth + 1, "break".into());
            }
            5 => {
                self.line(out, depth, "try:".into());
                self.body(out, depth + 1, budget);
                let h = format!("except ({}, KeyError) as err:", "ValueError");
                self.line(out, depth, h);
                self.line(out, depth + 1, "raise".into());
                if self.chance(0.5) {
                    self.line(out, depth, "finally:".into());
                    self.body(out, depth + 1, 0);
                }
            }
            6 => {
                let h = format!("with open({}) as fh:", self.atom());
                self.line(out, depth, h);
                self.body(out, depth + 1, budget);
            }
            7 => {
                self.line(out, depth, "async def fetch(url):".into());
                let a = format!("data = await {}(url)", self.pick(FUNCS));
                self.line(out, depth + 1, a);
                self.line(out, depth + 1, "return data".into());
            }
            _ => {
                let c = self.pick(COMMENTS).to_string();
                self.line(out, depth, c);
                let s = self.simple_stmt();
                self.line(out, depth, s);
            }
        }
    }
}

/// Deterministic corpus of `n` syntactically valid Python files.
pub fn generated_corpus(n: usize, seed: u64) -> Vec<(String, String)> {
    let mut files = Vec::with_capacity(n);
    let mut gen = Gen {
        rng: StdRng::seed_from_u64(seed),
        indent: String::new(),
    };
    let mut attempt = 0;
    while files.len() < n {
        attempt += 1;
        gen.indent = ["    ", "  ", "\t"][gen.rng.random_range(0..3)].to_string();
        let mut lines = Vec::new();
        if gen.chance(0.3) {
            lines.push("#!/usr/bin/env python3".to_string());
        }
        if gen.chance(0.5) {
            lines.push("import os".to_string());
            lines.push("from collections import defaultdict as dd".to_string());
            lines.push(String::new());
        }
        for _ in 0..gen.rng.random_range(2..7) {
            gen.block(&mut lines, 0, 2);
            if gen.chance(0.6) {
                lines.push(String::new());
            }
        }
        let style = gen.rng.random_range(0..3);
        let mut text = String::new();
        for (i, l) in lines.iter().enumerate() {
            text.push_str(l);
            let crlf = match style {
                0 => false,
                1 => true,
                _ => gen.chance(0.5),
            };
            if i + 1 < lines.len() || gen.chance(0.8) {
                text.push_str(if crlf { "\r\n" } else { "\n" });
            }
        }
        if Language::python().validate_syntax(&SourceText::from(text.as_str())) {
            files.push((format!("gen/{:03}/file_{attempt:04}.py", files.len() / 50), text));
        }
    }
    files
}

/// Hand-written files plus `generated` generated ones.
pub fn fixture_corpus(generated: usize) -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = HANDWRITTEN
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("hand/h{i:02}.py"), s.to_string()))
        .collect();
    files.extend(generated_corpus(generated, 0x5eed));
    files
}

/// Minimal-semantic-shift pairs: (category, wrong, correct).
pub const SHIFT_PAIRS: &[(&str, &str, &str)] = &[
    ("precedence", PRECEDENCE_WRONG, PRECEDENCE_RIGHT),
    (
        "precedence",
        "def middle(low, high):\n    return low + high // 2\n",
        "def middle(low, high):\n    return (low + high) // 2\n",
    ),
    (
        "precedence",
        "def area(w, h, pad):\n    return w + pad * h + pad\n",
        "def area(w, h, pad):\n    return (w + pad) * (h + pad)\n",
    ),
    (
        "precedence",
        "def avg(a, b):\n    return a + b / 2\n",
        "def avg(a, b):\n    return (a + b) / 2\n",
    ),
    (
        "precedence",
        "def is_odd_sum(a, b):\n    return a + b % 2 == 1\n",
        "def is_odd_sum(a, b):\n    return (a + b) % 2 == 1\n",
    ),
    (
        "off-by-one",
        "def total(xs):\n    s = 0\n    for i in range(len(xs) - 1):\n        s += xs[i]\n    return s\n",
        "def total(xs):\n    s = 0\n    for i in range(len(xs)):\n        s += xs[i]\n    return s\n",
    ),
    (
        "off-by-one",
        "def count_up(n):\n    return [i for i in range(n)]\n",
        "def count_up(n):\n    return [i for i in range(1, n + 1)]\n",
    ),
    (
        "off-by-one",
        "def last(xs):\n    return xs[len(xs)]\n",
        "def last(xs):\n    return xs[len(xs) - 1]\n",
    ),
    (
        "swapped-comparison",
        "def clamp(x, hi):\n    if x < hi:\n        return hi\n    return x\n",
        "def clamp(x, hi):\n    if x > hi:\n        return hi\n    return x\n",
    ),
    (
        "swapped-comparison",
        "def find(xs, t):\n    lo, hi = 0, len(xs)\n    while lo < hi:\n        mid = (lo + hi) // 2\n        if xs[mid] > t:\n            lo = mid + 1\n        else:\n            hi = mid\n    return lo\n",
        "def find(xs, t):\n    lo, hi = 0, len(xs)\n    while lo < hi:\n        mid = (lo + hi) // 2\n        if xs[mid] < t:\n            lo = mid + 1\n        else:\n            hi = mid\n    return lo\n",
    ),
    (
        "moved-statement",
        "def fact(n):\n    r = 1\n    while n > 1:\n        n -= 1\n        r *= n\n    return r\n",
        "def fact(n):\n    r = 1\n    while n > 1:\n        r *= n\n        n -= 1\n    return r\n",
    ),
    (
        "moved-statement",
        "def collect(xs):\n    out = []\n    for x in xs:\n        out.append(x)\n        return out\n",
        "def collect(xs):\n    out = []\n    for x in xs:\n        out.append(x)\n    return out\n",
    ),
    (
        "moved-statement",
        "def running(xs):\n    res = []\n    for x in xs:\n        acc = 0\n        acc += x\n        res.append(acc)\n    return res\n",
        "def running(xs):\n    res = []\n    acc = 0\n    for x in xs:\n        acc += x\n        res.append(acc)\n    return res\n",
    ),
];

pub fn shift_pairs() -> Vec<PairRecord> {
    SHIFT_PAIRS
        .iter()
        .enumerate()
        .map(|(i, (cat, wrong, right))| PairRecord::new(format!("{cat}-{i}"), wrong, right))
        .collect()
}

pub fn shift_vocab() -> MergedVocab {
    vocab_for(SHIFT_PAIRS.iter().flat_map(|(_, w, r)| [*w, *r]))
}
