//! Templated question generation over scene annotations, reference programs
//! for each template, and oracle execution.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AnswerType, BenchmarkItem};
use crate::agents::{ScriptRule, TemplateId};
use crate::interpreter::{execute_program, parse_program, Api, Limits, RuntimeError};
use crate::registry::Profile;
use crate::scene::{Color, Material, Object3D, Scene, Shape, SizeClass};
use crate::specialists::{AttributeKind, SpecialistSuite};

pub const HELPER_FILTER: &str = "_filter_objects";
pub const HELPER_KEEP: &str = "_keep_matching";

const KNOWN_HEIGHTS: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 3.0];
const SAMPLE_ATTEMPTS: usize = 200;

fn attribute_name(kind: AttributeKind) -> &'static str {
    match kind {
        AttributeKind::Color => "color",
        AttributeKind::Material => "material",
        AttributeKind::Size => "size",
        AttributeKind::Shape => "shape",
    }
}

fn attribute_of(o: &Object3D, kind: AttributeKind) -> &'static str {
    match kind {
        AttributeKind::Color => o.color.as_str(),
        AttributeKind::Material => o.material.as_str(),
        AttributeKind::Size => o.size_class.as_str(),
        AttributeKind::Shape => o.shape.as_str(),
    }
}

/// The `vqa` question used to read one attribute.
fn vqa_question(kind: AttributeKind) -> String {
    format!("What {} is this object?", attribute_name(kind))
}

const ATTRIBUTES: [AttributeKind; 4] = [
    AttributeKind::Size,
    AttributeKind::Color,
    AttributeKind::Material,
    AttributeKind::Shape,
];

/// Attribute constraints; `None` fields match anything.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Filter {
    pub size: Option<SizeClass>,
    pub color: Option<Color>,
    pub material: Option<Material>,
    pub shape: Option<Shape>,
}

impl Filter {
    pub fn matches(&self, o: &Object3D) -> bool {
        self.size.is_none_or(|s| s == o.size_class)
            && self.color.is_none_or(|c| c == o.color)
            && self.material.is_none_or(|m| m == o.material)
            && self.shape.is_none_or(|s| s == o.shape)
    }

    pub fn constrains(&self, kind: AttributeKind) -> bool {
        match kind {
            AttributeKind::Size => self.size.is_some(),
            AttributeKind::Color => self.color.is_some(),
            AttributeKind::Material => self.material.is_some(),
            AttributeKind::Shape => self.shape.is_some(),
        }
    }

    /// Keeps the given attributes of `o`.
    fn of_object(o: &Object3D, keep: &[AttributeKind]) -> Filter {
        Filter {
            size: keep.contains(&AttributeKind::Size).then_some(o.size_class),
            color: keep.contains(&AttributeKind::Color).then_some(o.color),
            material: keep.contains(&AttributeKind::Material).then_some(o.material),
            shape: keep.contains(&AttributeKind::Shape).then_some(o.shape),
        }
    }

    pub fn phrase(&self, plural: bool) -> String {
        let mut words: Vec<String> = Vec::new();
        if let Some(s) = self.size {
            words.push(s.as_str().into());
        }
        if let Some(c) = self.color {
            words.push(c.as_str().into());
        }
        if let Some(m) = self.material {
            words.push(m.as_str().into());
        }
        let noun = self.shape.map_or("object", |s| s.as_str());
        words.push(if plural { format!("{noun}s") } else { noun.into() });
        words.join(" ")
    }

    /// Prompt passed to `loc`.
    fn loc_prompt(&self) -> String {
        format!("{}s", self.shape.map_or("object", |s| s.as_str()))
    }

    /// Attribute checks that go through `vqa`, in a fixed order.
    fn vqa_checks(&self) -> Vec<(AttributeKind, &'static str)> {
        let mut out = Vec::new();
        if let Some(s) = self.size {
            out.push((AttributeKind::Size, s.as_str()));
        }
        if let Some(c) = self.color {
            out.push((AttributeKind::Color, c.as_str()));
        }
        if let Some(m) = self.material {
            out.push((AttributeKind::Material, m.as_str()));
        }
        out
    }
}

/// Left/right compare projected u of centers; front/behind compare depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Left,
    Right,
    Front,
    Behind,
}

impl Relation {
    pub const ALL: [Relation; 4] = [Relation::Left, Relation::Right, Relation::Front, Relation::Behind];

    pub fn phrase(self) -> &'static str {
        match self {
            Relation::Left => "left of",
            Relation::Right => "right of",
            Relation::Front => "in front of",
            Relation::Behind => "behind",
        }
    }

    /// Whether object `a` stands in this relation to object `b`.
    pub fn holds(self, scene: &Scene, a: usize, b: usize) -> bool {
        let ua = scene.camera.project(scene.objects[a].center).u;
        let ub = scene.camera.project(scene.objects[b].center).u;
        let za = scene.objects[a].center[2];
        let zb = scene.objects[b].center[2];
        match self {
            Relation::Left => ua < ub,
            Relation::Right => ua > ub,
            Relation::Front => za < zb,
            Relation::Behind => za > zb,
        }
    }

    fn test_expr(self, p: &str, r: &str) -> String {
        let depth = |v: &str| format!("depth(image, {v}[0], {v}[1])");
        match self {
            Relation::Left => format!("{p}[0] < {r}[0]"),
            Relation::Right => format!("{p}[0] > {r}[0]"),
            Relation::Front => format!("{} < {}", depth(p), depth(r)),
            Relation::Behind => format!("{} > {}", depth(p), depth(r)),
        }
    }
}

/// A description that must pick out exactly one object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Referent {
    pub filter: Filter,
    pub hop: Option<(Relation, Box<Referent>)>,
}

impl Referent {
    pub fn plain(filter: Filter) -> Self {
        Referent { filter, hop: None }
    }

    /// Ids of every object fitting the description, or `None` when a nested
    /// referent is not unique.
    pub fn candidates(&self, scene: &Scene) -> Option<Vec<usize>> {
        let anchor = match &self.hop {
            Some((rel, inner)) => Some((*rel, inner.resolve(scene)?)),
            None => None,
        };
        Some(
            scene
                .objects
                .iter()
                .filter(|o| self.filter.matches(o))
                .filter(|o| anchor.is_none_or(|(rel, b)| rel.holds(scene, o.id, b)))
                .map(|o| o.id)
                .collect(),
        )
    }

    pub fn resolve(&self, scene: &Scene) -> Option<usize> {
        match self.candidates(scene)?.as_slice() {
            [id] => Some(*id),
            _ => None,
        }
    }

    pub fn phrase(&self) -> String {
        let head = self.filter.phrase(false);
        match &self.hop {
            Some((rel, inner)) => format!("{head} that is {} the {}", rel.phrase(), inner.phrase()),
            None => head,
        }
    }

    fn hops(&self) -> usize {
        self.hop.as_ref().map_or(0, |(_, inner)| 1 + inner.hops())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuestionKind {
    Count,
    Exists,
    QueryAttribute,
    CountSameAttribute,
    Depth,
    ScaledHeight,
}

impl QuestionKind {
    pub const ALL: [QuestionKind; 6] = [
        QuestionKind::Count,
        QuestionKind::Exists,
        QuestionKind::QueryAttribute,
        QuestionKind::CountSameAttribute,
        QuestionKind::Depth,
        QuestionKind::ScaledHeight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionKind::Count => "count",
            QuestionKind::Exists => "exists",
            QuestionKind::QueryAttribute => "query_attribute",
            QuestionKind::CountSameAttribute => "count_same_attribute",
            QuestionKind::Depth => "depth",
            QuestionKind::ScaledHeight => "scaled_height",
        }
    }

    /// Templates answerable with the profile's predefined modules.
    pub fn for_profile(profile: Profile) -> Vec<QuestionKind> {
        match profile {
            Profile::Clevr => QuestionKind::ALL[..5].to_vec(),
            Profile::Omni3d => QuestionKind::ALL.to_vec(),
        }
    }
}

impl fmt::Display for QuestionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuestionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QuestionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| format!("unknown question template '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuestionSpec {
    Count {
        filter: Filter,
    },
    Exists {
        filter: Filter,
        relation: Relation,
        referent: Referent,
    },
    QueryAttribute {
        attribute: AttributeKind,
        referent: Referent,
    },
    /// Counts the other objects sharing the referent's attribute.
    CountSameAttribute {
        attribute: AttributeKind,
        referent: Referent,
    },
    Depth {
        referent: Referent,
    },
    /// Height of `target` given that `known` is `known_height` meters tall,
    /// using 3D size proportional to 2D size times depth.
    ScaledHeight {
        known: Referent,
        known_height: f64,
        target: Referent,
    },
}

impl QuestionSpec {
    pub fn kind(&self) -> QuestionKind {
        match self {
            QuestionSpec::Count { .. } => QuestionKind::Count,
            QuestionSpec::Exists { .. } => QuestionKind::Exists,
            QuestionSpec::QueryAttribute { .. } => QuestionKind::QueryAttribute,
            QuestionSpec::CountSameAttribute { .. } => QuestionKind::CountSameAttribute,
            QuestionSpec::Depth { .. } => QuestionKind::Depth,
            QuestionSpec::ScaledHeight { .. } => QuestionKind::ScaledHeight,
        }
    }

    pub fn answer_type(&self) -> AnswerType {
        match self {
            QuestionSpec::Count { .. } | QuestionSpec::CountSameAttribute { .. } => AnswerType::NumericCount,
            QuestionSpec::Exists { .. } => AnswerType::YesNo,
            QuestionSpec::QueryAttribute { .. } => AnswerType::MultiChoice,
            QuestionSpec::Depth { .. } | QuestionSpec::ScaledHeight { .. } => AnswerType::NumericOther,
        }
    }

    pub fn question(&self) -> String {
        match self {
            QuestionSpec::Count { filter } => format!("How many {} are there?", filter.phrase(true)),
            QuestionSpec::Exists {
                filter,
                relation,
                referent,
            } => format!(
                "Are there any {} {} the {}?",
                filter.phrase(true),
                relation.phrase(),
                referent.phrase()
            ),
            QuestionSpec::QueryAttribute { attribute, referent } => {
                format!("What {} is the {}?", attribute_name(*attribute), referent.phrase())
            }
            QuestionSpec::CountSameAttribute { attribute, referent } => format!(
                "How many other objects have the same {} as the {}?",
                attribute_name(*attribute),
                referent.phrase()
            ),
            QuestionSpec::Depth { referent } => {
                format!("How far from the camera is the {}, in meters?", referent.phrase())
            }
            QuestionSpec::ScaledHeight {
                known,
                known_height,
                target,
            } => format!(
                "If the {} is {} meters tall, how tall is the {} in meters?",
                known.phrase(),
                known_height,
                target.phrase()
            ),
        }
    }

    /// Ground truth by exhaustive evaluation over the annotations. `None`
    /// when a referent is not unique or the question is degenerate.
    pub fn answer(&self, scene: &Scene) -> Option<String> {
        match self {
            QuestionSpec::Count { filter } => {
                Some(scene.objects.iter().filter(|o| filter.matches(o)).count().to_string())
            }
            QuestionSpec::Exists {
                filter,
                relation,
                referent,
            } => {
                let r = referent.resolve(scene)?;
                let found = scene
                    .objects
                    .iter()
                    .any(|o| filter.matches(o) && relation.holds(scene, o.id, r));
                Some(if found { "yes" } else { "no" }.into())
            }
            QuestionSpec::QueryAttribute { attribute, referent } => {
                if referent.filter.constrains(*attribute) {
                    return None;
                }
                let r = referent.resolve(scene)?;
                Some(attribute_of(&scene.objects[r], *attribute).into())
            }
            QuestionSpec::CountSameAttribute { attribute, referent } => {
                if referent.filter.constrains(*attribute) {
                    return None;
                }
                let r = referent.resolve(scene)?;
                let value = attribute_of(&scene.objects[r], *attribute);
                let n = scene
                    .objects
                    .iter()
                    .filter(|o| o.id != r && attribute_of(o, *attribute) == value)
                    .count();
                Some(n.to_string())
            }
            QuestionSpec::Depth { referent } => {
                let r = referent.resolve(scene)?;
                Some(scene.objects[r].center[2].to_string())
            }
            QuestionSpec::ScaledHeight {
                known,
                known_height,
                target,
            } => {
                let a = known.resolve(scene)?;
                let b = target.resolve(scene)?;
                if a == b {
                    return None;
                }
                let ha = scene.project_bbox(a).ok()?.height();
                let hb = scene.project_bbox(b).ok()?.height();
                let za = scene.objects[a].center[2];
                let zb = scene.objects[b].center[2];
                let v = known_height * (hb * zb) / (ha * za);
                (v.is_finite() && v != 0.0).then(|| v.to_string())
            }
        }
    }

    /// A program that answers the question when run with oracle
    /// specialists. With `use_helpers` attribute filtering goes through the
    /// generated helper methods instead of inline loops.
    pub fn reference_program(&self, use_helpers: bool) -> String {
        let mut e = Emitter {
            lines: Vec::new(),
            next: 0,
            use_helpers,
        };
        match self {
            QuestionSpec::Count { filter } => {
                let pts = e.filter(filter);
                e.line(format!("final_result = len({pts})"));
            }
            QuestionSpec::Exists {
                filter,
                relation,
                referent,
            } => {
                let r = e.referent(referent);
                let pts = e.filter(filter);
                e.line("found = False".into());
                e.line(format!("for p in {pts}:"));
                e.line(format!("    if {}:", relation.test_expr("p", &r)));
                e.line("        found = True".into());
                e.line("final_result = 'yes' if found else 'no'".into());
            }
            QuestionSpec::QueryAttribute { attribute, referent } => {
                let r = e.referent(referent);
                e.line(format!(
                    "final_result = vqa(image, '{}', {r}[0], {r}[1])",
                    vqa_question(*attribute)
                ));
            }
            QuestionSpec::CountSameAttribute { attribute, referent } => {
                let r = e.referent(referent);
                let q = vqa_question(*attribute);
                e.line(format!("target = vqa(image, '{q}', {r}[0], {r}[1])"));
                e.line("count = 0".into());
                e.line("for p in loc(image, 'objects'):".into());
                e.line(format!(
                    "    if not same_object(image, p[0], p[1], {r}[0], {r}[1]) and vqa(image, '{q}', p[0], p[1]) == target:"
                ));
                e.line("        count += 1".into());
                e.line("final_result = count".into());
            }
            QuestionSpec::Depth { referent } => {
                let r = e.referent(referent);
                e.line(format!("final_result = depth(image, {r}[0], {r}[1])"));
            }
            QuestionSpec::ScaledHeight {
                known,
                known_height,
                target,
            } => {
                let a = e.referent(known);
                let b = e.referent(target);
                e.line(format!("ha = get_2D_object_size(image, {a}[0], {a}[1])[1]"));
                e.line(format!("za = depth(image, {a}[0], {a}[1])"));
                e.line(format!("hb = get_2D_object_size(image, {b}[0], {b}[1])[1]"));
                e.line(format!("zb = depth(image, {b}[0], {b}[1])"));
                e.line(format!("final_result = {known_height} * (hb * zb) / (ha * za)"));
            }
        }
        e.lines.join("\n")
    }
}

struct Emitter {
    lines: Vec<String>,
    next: usize,
    use_helpers: bool,
}

impl Emitter {
    fn line(&mut self, s: String) {
        self.lines.push(s);
    }

    fn fresh(&mut self, base: &str) -> String {
        self.next += 1;
        format!("{base}_{}", self.next)
    }

    /// Emits lines binding a list of points matching `f`; returns its name.
    fn filter(&mut self, f: &Filter) -> String {
        let var = self.fresh("pts");
        let noun = f.loc_prompt();
        let checks = f.vqa_checks();
        if self.use_helpers && !checks.is_empty() {
            let (kind, value) = checks[0];
            self.line(format!(
                "{var} = {HELPER_FILTER}(image, '{noun}', '{}', '{value}')",
                vqa_question(kind)
            ));
            for (kind, value) in &checks[1..] {
                self.line(format!(
                    "{var} = {HELPER_KEEP}(image, {var}, '{}', '{value}')",
                    vqa_question(*kind)
                ));
            }
            return var;
        }
        self.line(format!("{var} = loc(image, '{noun}')"));
        for (kind, value) in checks {
            let kept = self.fresh("kept");
            self.line(format!("{kept} = []"));
            self.line(format!("for p in {var}:"));
            self.line(format!(
                "    if vqa(image, '{}', p[0], p[1]) == '{value}':",
                vqa_question(kind)
            ));
            self.line(format!("        {kept}.append(p)"));
            self.line(format!("{var} = {kept}"));
        }
        var
    }

    /// Emits lines binding the referent's point; returns its name.
    fn referent(&mut self, r: &Referent) -> String {
        let mut cands = self.filter(&r.filter);
        if let Some((rel, inner)) = &r.hop {
            let anchor = self.referent(inner);
            let kept = self.fresh("kept");
            self.line(format!("{kept} = []"));
            self.line(format!("for p in {cands}:"));
            self.line(format!("    if {}:", rel.test_expr("p", &anchor)));
            self.line(format!("        {kept}.append(p)"));
            cands = kept;
        }
        let obj = self.fresh("obj");
        self.line(format!("{obj} = {cands}[0]"));
        obj
    }
}

/// Docstring and signature of the two helpers the reference programs use.
/// `_filter_objects` is listed first and calls `_keep_matching`.
pub fn helper_signatures() -> Vec<(String, String, String)> {
    vec![
        (
            "Locates objects of a category and keeps those whose attribute answer equals a value.\n\nArgs:\n    image (image): Image to search.\n    noun (str): Category passed to loc, e.g. 'cubes' or 'objects'.\n    question (str): Attribute question passed to vqa.\n    value (str): Answer an object must give to be kept.\n\nReturns:\n    list: [x, y] centers of the kept objects.".into(),
            format!("def {HELPER_FILTER}(image, noun, question, value):"),
            format!("return {HELPER_KEEP}(image, loc(image, noun), question, value)"),
        ),
        (
            "Keeps the points whose attribute answer equals a value.\n\nArgs:\n    image (image): Image to search.\n    points (list): [x, y] object centers.\n    question (str): Attribute question passed to vqa.\n    value (str): Answer an object must give to be kept.\n\nReturns:\n    list: The kept points, in input order.".into(),
            format!("def {HELPER_KEEP}(image, points, question, value):"),
            "kept = []\nfor p in points:\n    if vqa(image, question, p[0], p[1]) == value:\n        kept.append(p)\nreturn kept".into(),
        ),
    ]
}

/// Scripted agent replies that build the helper API and answer each
/// question with the given program.
pub fn scripted_rules(programs: &[(String, String)]) -> Vec<ScriptRule> {
    let helpers = helper_signatures();
    let proposal: String = helpers
        .iter()
        .map(|(doc, sig, _)| format!("<docstring>\n{doc}\n</docstring>\n<signature>{sig}</signature>\n"))
        .collect();
    let mut rules = vec![ScriptRule {
        template: Some(TemplateId::Signature),
        contains: Vec::new(),
        responses: vec![proposal],
    }];
    for (_, sig, body) in &helpers {
        let head = sig.split('(').next().unwrap_or(sig);
        rules.push(ScriptRule {
            template: Some(TemplateId::Implementation),
            contains: vec![format!("<signature>{head}(")],
            responses: vec![format!("<implementation>\n{body}\n</implementation>")],
        });
    }
    let mut seen = BTreeSet::new();
    for (question, program) in programs {
        if !seen.insert(question.clone()) {
            continue;
        }
        rules.push(ScriptRule {
            template: Some(TemplateId::Program),
            contains: vec![format!("<question>{question}</question>")],
            responses: vec![format!(
                "Locate the referenced objects and read their attributes.\n<program>\n{program}\n</program>"
            )],
        });
    }
    rules
}

/// Runs a program against the oracle specialists of `scene` and returns the
/// `final_result` binding.
pub fn oracle_execute(scene: Arc<Scene>, program: &str, api: &dyn Api) -> Result<serde_json::Value, RuntimeError> {
    let program = parse_program(program)?;
    let suite = SpecialistSuite::oracle(scene);
    execute_program(&program, api, &suite, Limits::default())
        .result
        .map(|v| v.to_json())
}

struct Sampler<'a> {
    scene: &'a Scene,
    rng: ChaCha8Rng,
}

impl Sampler<'_> {
    fn object(&mut self) -> &Object3D {
        self.scene.objects.choose(&mut self.rng).expect("scenes are nonempty")
    }

    fn subset(&mut self, from: &[AttributeKind]) -> Vec<AttributeKind> {
        from.iter().copied().filter(|_| self.rng.random_bool(0.5)).collect()
    }

    /// Either drawn from an object's attributes or from the vocabulary.
    fn filter(&mut self) -> Filter {
        if self.rng.random_bool(0.7) {
            let o = self.object().clone();
            let keep = self.subset(&ATTRIBUTES);
            Filter::of_object(&o, &keep)
        } else {
            let r = &mut self.rng;
            Filter {
                size: r.random_bool(0.3).then(|| *SizeClass::ALL.choose(r).expect("nonempty")),
                color: r.random_bool(0.5).then(|| *Color::ALL.choose(r).expect("nonempty")),
                material: r.random_bool(0.3).then(|| *Material::ALL.choose(r).expect("nonempty")),
                shape: r.random_bool(0.5).then(|| *Shape::ALL.choose(r).expect("nonempty")),
            }
        }
    }

    fn referent(&mut self, exclude: Option<AttributeKind>, hop_chance: f64) -> Referent {
        let o = self.object().clone();
        let allowed: Vec<AttributeKind> = ATTRIBUTES.into_iter().filter(|a| Some(*a) != exclude).collect();
        let keep = self.subset(&allowed);
        let filter = Filter::of_object(&o, &keep);
        if self.scene.objects.len() > 1 && self.rng.random_bool(hop_chance) {
            let rel = *Relation::ALL.choose(&mut self.rng).expect("nonempty");
            let others: Vec<usize> = self
                .scene
                .objects
                .iter()
                .filter(|b| rel.holds(self.scene, o.id, b.id))
                .map(|b| b.id)
                .collect();
            if let Some(&b) = others.choose(&mut self.rng) {
                let keep = self.subset(&ATTRIBUTES);
                let inner = Referent::plain(Filter::of_object(&self.scene.objects[b], &keep));
                return Referent {
                    filter,
                    hop: Some((rel, Box::new(inner))),
                };
            }
        }
        Referent::plain(filter)
    }

    fn attribute(&mut self) -> AttributeKind {
        *ATTRIBUTES.choose(&mut self.rng).expect("nonempty")
    }

    fn spec(&mut self, kind: QuestionKind) -> QuestionSpec {
        match kind {
            QuestionKind::Count => QuestionSpec::Count { filter: self.filter() },
            QuestionKind::Exists => QuestionSpec::Exists {
                referent: self.referent(None, 0.5),
                relation: *Relation::ALL.choose(&mut self.rng).expect("nonempty"),
                filter: self.filter(),
            },
            QuestionKind::QueryAttribute => {
                let attribute = self.attribute();
                QuestionSpec::QueryAttribute {
                    attribute,
                    referent: self.referent(Some(attribute), 0.3),
                }
            }
            QuestionKind::CountSameAttribute => {
                let attribute = self.attribute();
                QuestionSpec::CountSameAttribute {
                    attribute,
                    referent: self.referent(Some(attribute), 0.2),
                }
            }
            QuestionKind::Depth => QuestionSpec::Depth {
                referent: self.referent(None, 0.2),
            },
            QuestionKind::ScaledHeight => QuestionSpec::ScaledHeight {
                known: self.referent(None, 0.0),
                known_height: *KNOWN_HEIGHTS.choose(&mut self.rng).expect("nonempty"),
                target: self.referent(None, 0.0),
            },
        }
    }
}

/// Instantiates up to `count` items on one scene, cycling through
/// `templates`. Specs whose referents are not unique are redrawn; a slot
/// that cannot be filled is skipped, so fewer items may come back.
pub fn generate_items(
    scene: &Scene,
    scene_ref: &str,
    id_prefix: &str,
    templates: &[QuestionKind],
    count: usize,
    seed: u64,
) -> Vec<(BenchmarkItem, QuestionSpec)> {
    let mut sampler = Sampler {
        scene,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    if templates.is_empty() {
        return out;
    }
    for slot in 0..count {
        let kind = templates[slot % templates.len()];
        for _ in 0..SAMPLE_ATTEMPTS {
            let spec = sampler.spec(kind);
            let Some(answer) = spec.answer(scene) else { continue };
            let question = spec.question();
            if !seen.insert(question.clone()) {
                continue;
            }
            let item = BenchmarkItem {
                id: format!("{id_prefix}-{:03}", out.len()),
                scene: scene_ref.to_string(),
                question,
                answer,
                answer_type: spec.answer_type(),
            };
            out.push((item, spec));
            break;
        }
    }
    out
}

impl QuestionSpec {
    /// Relation hops on the existence path, for coverage checks.
    pub fn hops(&self) -> usize {
        match self {
            QuestionSpec::Exists { referent, .. } => 1 + referent.hops(),
            QuestionSpec::QueryAttribute { referent, .. }
            | QuestionSpec::CountSameAttribute { referent, .. }
            | QuestionSpec::Depth { referent } => referent.hops(),
            QuestionSpec::Count { .. } | QuestionSpec::ScaledHeight { .. } => 0,
        }
    }
}
