//! Binary learner snapshots.
//!
//! Layout: a UTF-8 text header terminated by a line `end`, then a
//! little-endian `f32` payload. Per network, layers in order, each as
//! row-major weight (outputs x inputs) followed by bias. When optimizer state
//! is present, each Adam contributes its first moments then second moments in
//! the same tensor order.
//!
//! ```text
//! lander-td3-checkpoint 1
//! net actor 15,512,512,256,128,3 relu,relu,relu,relu,tanh
//! ...
//! optimizer 1
//! adam actor <step>
//! ...
//! rng <seed-hex> <stream> <word-pos>
//! updates <n>
//! hyperparams <json>
//! payload <f32 count>
//! end
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;

use super::adam::Adam;
use super::learner::{Td3Hyperparams, Td3Learner};
use super::mlp::{Activation, Layer, Mlp};
use crate::rng::StreamRng;
use crate::{Error, Result};

pub const MAGIC: &str = "lander-td3-checkpoint";
pub const VERSION: u32 = 1;

pub const NET_NAMES: [&str; 6] = [
    "actor",
    "actor_target",
    "critic1",
    "critic2",
    "critic1_target",
    "critic2_target",
];
const ADAM_NAMES: [&str; 3] = ["actor", "critic1", "critic2"];

fn nets(l: &Td3Learner<f32>) -> [&Mlp<f32>; 6] {
    [
        &l.actor,
        &l.actor_target,
        &l.critic1,
        &l.critic2,
        &l.critic1_target,
        &l.critic2_target,
    ]
}

fn adams(l: &Td3Learner<f32>) -> [&Adam<f32>; 3] {
    [&l.actor_opt, &l.critic1_opt, &l.critic2_opt]
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn write<W: Write>(learner: &Td3Learner<f32>, with_optimizer: bool, mut w: W) -> Result<()> {
    let io = |e| Error::io("<checkpoint stream>", e);
    let mut header = format!("{MAGIC} {VERSION}\n");
    let mut payload = 0usize;
    for (name, net) in NET_NAMES.iter().zip(nets(learner)) {
        let acts = join(net.layers().iter().map(|l| l.activation.name()));
        header += &format!("net {name} {} {acts}\n", join(net.layer_dims()));
        payload += net.param_count();
    }
    header += &format!("optimizer {}\n", u8::from(with_optimizer));
    if with_optimizer {
        for (name, opt) in ADAM_NAMES.iter().zip(adams(learner)) {
            header += &format!("adam {name} {}\n", opt.step);
            payload += 2 * opt.m.iter().map(Vec::len).sum::<usize>();
        }
    }
    let rng = &learner.noise_rng;
    let seed_hex: String = rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
    header += &format!("rng {seed_hex} {} {}\n", rng.get_stream(), rng.get_word_pos());
    header += &format!("updates {}\n", learner.updates);
    let hp = serde_json::to_string(&learner.hp).map_err(|e| bad(e.to_string()))?;
    header += &format!("hyperparams {hp}\n");
    header += &format!("payload {payload}\nend\n");
    w.write_all(header.as_bytes()).map_err(io)?;

    let mut put = |xs: &[f32]| -> Result<()> {
        let mut bytes = Vec::with_capacity(xs.len() * 4);
        for x in xs {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&bytes).map_err(io)
    };
    for net in nets(learner) {
        for p in net.params() {
            put(p)?;
        }
    }
    if with_optimizer {
        for opt in adams(learner) {
            for m in &opt.m {
                put(m)?;
            }
            for v in &opt.v {
                put(v)?;
            }
        }
    }
    Ok(())
}

pub fn save_file(learner: &Td3Learner<f32>, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write(learner, true, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

struct NetSpec {
    dims: Vec<usize>,
    activations: Vec<Activation>,
}

struct Header {
    nets: Vec<NetSpec>,
    adam_steps: Option<Vec<u64>>,
    rng: StreamRng,
    updates: u64,
    hp: Td3Hyperparams,
    payload: usize,
}

fn parse_header<R: BufRead>(r: &mut R) -> Result<Header> {
    let mut lines = Vec::new();
    loop {
        let mut line = String::new();
        let n = r.read_line(&mut line).map_err(|e| bad(format!("unreadable header: {e}")))?;
        if n == 0 {
            return Err(bad("header ended before `end` line"));
        }
        let line = line.trim_end().to_string();
        if line == "end" {
            break;
        }
        if lines.len() > 64 {
            return Err(bad("header too long; not a checkpoint file?"));
        }
        lines.push(line);
    }
    let mut it = lines.iter().enumerate();
    let field = |ln: usize, line: &str, key: &str| -> Result<Vec<String>> {
        let mut parts = line.splitn(2, ' ');
        let k = parts.next().unwrap_or("");
        if k != key {
            return Err(bad(format!("header line {}: expected `{key}`, found `{line}`", ln + 1)));
        }
        Ok(parts.next().unwrap_or("").split(' ').map(str::to_string).collect())
    };
    let (ln, first) = it.next().ok_or_else(|| bad("empty header"))?;
    let magic = field(ln, first, MAGIC).map_err(|_| bad(format!("bad magic line `{first}`")))?;
    if magic.first().map(String::as_str) != Some(&VERSION.to_string()) {
        return Err(bad(format!("unsupported format version {:?}, expected {VERSION}", magic)));
    }

    let mut nets = Vec::new();
    for expected in NET_NAMES {
        let (ln, line) = it.next().ok_or_else(|| bad(format!("missing net `{expected}`")))?;
        let f = field(ln, line, "net")?;
        if f.len() != 3 || f[0] != expected {
            return Err(bad(format!("header line {}: expected net `{expected}`, found `{line}`", ln + 1)));
        }
        let dims = f[1]
            .split(',')
            .map(|d| d.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("net `{expected}` dims: {e}")))?;
        let activations = f[2]
            .split(',')
            .map(|a| Activation::from_name(a).ok_or_else(|| bad(format!("net `{expected}`: unknown activation `{a}`"))))
            .collect::<Result<Vec<_>>>()?;
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(bad(format!(
                "net `{expected}`: {} dims but {} activations",
                dims.len(),
                activations.len()
            )));
        }
        nets.push(NetSpec { dims, activations });
    }

    let (ln, line) = it.next().ok_or_else(|| bad("missing optimizer flag"))?;
    let flag = field(ln, line, "optimizer")?;
    let adam_steps = match flag[0].as_str() {
        "0" => None,
        "1" => {
            let mut steps = Vec::new();
            for expected in ADAM_NAMES {
                let (ln, line) = it.next().ok_or_else(|| bad(format!("missing adam `{expected}`")))?;
                let f = field(ln, line, "adam")?;
                if f.len() != 2 || f[0] != expected {
                    return Err(bad(format!("header line {}: expected adam `{expected}`", ln + 1)));
                }
                steps.push(f[1].parse().map_err(|e| bad(format!("adam `{expected}` step: {e}")))?);
            }
            Some(steps)
        }
        other => return Err(bad(format!("optimizer flag must be 0 or 1, got `{other}`"))),
    };

    let (ln, line) = it.next().ok_or_else(|| bad("missing rng line"))?;
    let f = field(ln, line, "rng")?;
    if f.len() != 3 || f[0].len() != 64 {
        return Err(bad(format!("malformed rng line `{line}`")));
    }
    let mut seed = [0u8; 32];
    for (i, b) in seed.iter_mut().enumerate() {
        *b = u8::from_str_radix(&f[0][2 * i..2 * i + 2], 16).map_err(|e| bad(format!("rng seed: {e}")))?;
    }
    let mut rng = StreamRng::from_seed(seed);
    rng.set_stream(f[1].parse().map_err(|e| bad(format!("rng stream: {e}")))?);
    rng.set_word_pos(f[2].parse().map_err(|e| bad(format!("rng word position: {e}")))?);

    let (ln, line) = it.next().ok_or_else(|| bad("missing updates line"))?;
    let updates = field(ln, line, "updates")?[0]
        .parse()
        .map_err(|e| bad(format!("updates: {e}")))?;
    let (ln, line) = it.next().ok_or_else(|| bad("missing hyperparams line"))?;
    field(ln, line, "hyperparams")?;
    let hp: Td3Hyperparams = serde_json::from_str(&line["hyperparams ".len()..])
        .map_err(|e| bad(format!("hyperparams: {e}")))?;
    let (ln, line) = it.next().ok_or_else(|| bad("missing payload line"))?;
    let payload = field(ln, line, "payload")?[0]
        .parse()
        .map_err(|e| bad(format!("payload: {e}")))?;
    if let Some((ln, extra)) = it.next() {
        return Err(bad(format!("header line {}: unexpected `{extra}`", ln + 1)));
    }
    Ok(Header {
        nets,
        adam_steps,
        rng,
        updates,
        hp,
        payload,
    })
}

fn read_floats<R: Read>(r: &mut R, n: usize, what: &str) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes)
        .map_err(|_| bad(format!("payload truncated while reading {what} ({n} floats)")))?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn read_net<R: Read>(r: &mut R, spec: &NetSpec, name: &str) -> Result<Mlp<f32>> {
    let mut layers = Vec::new();
    for (i, w) in spec.dims.windows(2).enumerate() {
        let mut layer = Layer::zeros(w[0], w[1], spec.activations[i]);
        layer.weight = read_floats(r, w[0] * w[1], &format!("{name} layer {i} weight"))?;
        layer.bias = read_floats(r, w[1], &format!("{name} layer {i} bias"))?;
        layers.push(layer);
    }
    Mlp::from_layers(layers)
}

fn read_moments<R: Read>(r: &mut R, net: &Mlp<f32>, name: &str) -> Result<Vec<Vec<f32>>> {
    net.params()
        .iter()
        .enumerate()
        .map(|(i, p)| read_floats(r, p.len(), &format!("adam {name} tensor {i}")))
        .collect()
}

/// Reads a full learner. Without stored optimizer state the Adam moments are zero.
pub fn read<R: BufRead>(mut r: R) -> Result<Td3Learner<f32>> {
    let h = parse_header(&mut r)?;
    let expected: usize = h
        .nets
        .iter()
        .map(|n| n.dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum::<usize>())
        .sum::<usize>();
    let mut declared = expected;
    if h.adam_steps.is_some() {
        declared += 2 * [0usize, 2, 3]
            .iter()
            .map(|&i| h.nets[i].dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum::<usize>())
            .sum::<usize>();
    }
    if declared != h.payload {
        return Err(bad(format!(
            "header declares {} payload floats but layer dims imply {declared}",
            h.payload
        )));
    }
    let mut nets = Vec::with_capacity(6);
    for (spec, name) in h.nets.iter().zip(NET_NAMES) {
        nets.push(read_net(&mut r, spec, name)?);
    }
    let pairs = [(0usize, 0usize), (2, 1), (3, 2)];
    let mut opts: Vec<Adam<f32>> = pairs
        .iter()
        .map(|&(net, _)| Adam::new(h.hp.learning_rate, &nets[net]))
        .collect();
    if let Some(steps) = &h.adam_steps {
        for &(net, slot) in &pairs {
            let m = read_moments(&mut r, &nets[net], ADAM_NAMES[slot])?;
            let v = read_moments(&mut r, &nets[net], ADAM_NAMES[slot])?;
            let opt = &mut opts[slot];
            opt.m = m;
            opt.v = v;
            opt.step = steps[slot];
        }
    }
    let mut rest = [0u8; 1];
    match r.read(&mut rest) {
        Ok(0) => {}
        Ok(_) => return Err(bad("payload longer than the header declares")),
        Err(e) => return Err(bad(format!("unreadable payload tail: {e}"))),
    }
    if nets[0].input_dim() + nets[0].output_dim() != nets[2].input_dim() {
        return Err(bad(format!(
            "critic input {} does not match actor {} -> {}",
            nets[2].input_dim(),
            nets[0].input_dim(),
            nets[0].output_dim()
        )));
    }
    let mut nets = nets.into_iter();
    let mut opts = opts.into_iter();
    let mut next = || nets.next().expect("six nets");
    Ok(Td3Learner {
        actor: next(),
        actor_target: next(),
        critic1: next(),
        critic2: next(),
        critic1_target: next(),
        critic2_target: next(),
        actor_opt: opts.next().expect("three optimizers"),
        critic1_opt: opts.next().expect("three optimizers"),
        critic2_opt: opts.next().expect("three optimizers"),
        hp: h.hp,
        updates: h.updates,
        noise_rng: h.rng,
    })
}

pub fn load_file(path: &Path) -> Result<Td3Learner<f32>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read(BufReader::new(f))
}
