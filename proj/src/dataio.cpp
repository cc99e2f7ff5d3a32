#include "pedcross/dataio.hpp"

#include "pedcross/rng.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace pedcross {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void io_check(bool ok, const std::string& msg) {
  if (!ok) throw IoError(msg);
}

// --- emission ---------------------------------------------------------------

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string num(int v) { return std::to_string(v); }

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    io_check(out.good(), "cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    io_check(out.good(), "write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string scene_json(const SceneSequence& seq) {
  std::string s;
  s.reserve(1 << 16);
  s += "{\"version\":1,\"image_dims\":[" + num(seq.image_w) + "," +
       num(seq.image_h) + "],\"target_index\":" + num(seq.target_index) +
       ",\"frames\":[";
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    if (t) s += ",";
    s += "{\"objects\":[";
    const auto& objs = seq.frames[t];
    for (std::size_t i = 0; i < objs.size(); ++i) {
      const SceneObject& o = objs[i];
      if (i) s += ",";
      s += "{\"id\":" + num(o.id) + ",\"kind\":\"" + kind_name(o.kind) +
           "\",\"bbox\":[" + num(o.bbox.x1) + "," + num(o.bbox.y1) + "," +
           num(o.bbox.x2) + "," + num(o.bbox.y2) + "],\"signal\":\"" +
           signal_name(o.signal) + "\",\"appearance\":[";
      for (std::size_t k = 0; k < o.appearance.size(); ++k) {
        if (k) s += ",";
        s += num(o.appearance[k]);
      }
      s += "]}";
    }
    s += "]}";
  }
  s += "],\"label\":{\"crossing\":" + num(seq.label_crossing) + ",\"future\":[";
  for (std::size_t k = 0; k < seq.label_future.size(); ++k) {
    if (k) s += ",";
    s += "[" + num(seq.label_future[k].x()) + "," + num(seq.label_future[k].y()) + "]";
  }
  s += "]}}";
  return s;
}

// --- strict parsing helpers --------------------------------------------------

const json& field(const json& obj, const std::string& key, const std::string& path) {
  io_check(obj.is_object(), path + ": expected object");
  auto it = obj.find(key);
  io_check(it != obj.end(), path + ": missing field '" + key + "'");
  return *it;
}

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    io_check(known.count(it.key()) > 0,
             path + ": unknown field '" + it.key() + "'");
  }
}

int as_int(const json& v, const std::string& path) {
  io_check(v.is_number_integer(), path + ": expected integer");
  return v.get<int>();
}

double as_double(const json& v, const std::string& path) {
  io_check(v.is_number(), path + ": expected number");
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& path) {
  io_check(v.is_string(), path + ": expected string");
  return v.get<std::string>();
}

void check_version(const json& doc, const std::string& what) {
  const int v = as_int(field(doc, "version", what), what + ".version");
  io_check(v == 1, what + ".version: unsupported version " + std::to_string(v));
}

json parse_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  io_check(in.good(), "cannot open '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("parse error in '" + path.string() + "': " + e.what());
  }
  return doc;
}

}  // namespace

void save_scene(const fs::path& path, const SceneSequence& seq) {
  validate_scene(seq);
  write_atomic(path, scene_json(seq));
}

SceneSequence load_scene(const fs::path& path) {
  const json doc = parse_file(path);
  check_version(doc, "scene");
  reject_unknown(doc, {"version", "image_dims", "target_index", "frames", "label"},
                 "scene");

  SceneSequence seq;
  {
    const json& dims = field(doc, "image_dims", "scene");
    io_check(dims.is_array() && dims.size() == 2, "image_dims: expected [W,H]");
    seq.image_w = as_int(dims[0], "image_dims[0]");
    seq.image_h = as_int(dims[1], "image_dims[1]");
  }
  seq.target_index = as_int(field(doc, "target_index", "scene"), "target_index");

  const json& frames = field(doc, "frames", "scene");
  io_check(frames.is_array(), "frames: expected array");
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const std::string fpath = "frames[" + std::to_string(t) + "]";
    reject_unknown(frames[t], {"objects"}, fpath);
    const json& objs = field(frames[t], "objects", fpath);
    io_check(objs.is_array(), fpath + ".objects: expected array");
    std::vector<SceneObject> frame;
    for (std::size_t i = 0; i < objs.size(); ++i) {
      const std::string opath = fpath + ".objects[" + std::to_string(i) + "]";
      const json& jo = objs[i];
      reject_unknown(jo, {"id", "kind", "bbox", "signal", "appearance"}, opath);
      SceneObject o;
      o.id = as_int(field(jo, "id", opath), opath + ".id");
      try {
        o.kind = kind_from_name(as_string(field(jo, "kind", opath), opath + ".kind"));
        o.signal =
            signal_from_name(as_string(field(jo, "signal", opath), opath + ".signal"));
      } catch (const std::invalid_argument& e) {
        throw IoError(opath + ": " + e.what());
      }
      const json& bb = field(jo, "bbox", opath);
      io_check(bb.is_array() && bb.size() == 4,
               opath + ".bbox: expected [x1,y1,x2,y2]");
      o.bbox.x1 = as_double(bb[0], opath + ".bbox");
      o.bbox.y1 = as_double(bb[1], opath + ".bbox");
      o.bbox.x2 = as_double(bb[2], opath + ".bbox");
      o.bbox.y2 = as_double(bb[3], opath + ".bbox");
      const json& app = field(jo, "appearance", opath);
      io_check(app.is_array(), opath + ".appearance: expected array");
      for (std::size_t k = 0; k < app.size(); ++k)
        o.appearance.push_back(as_double(app[k], opath + ".appearance"));
      frame.push_back(std::move(o));
    }
    seq.frames.push_back(std::move(frame));
  }

  const json& label = field(doc, "label", "scene");
  reject_unknown(label, {"crossing", "future"}, "label");
  seq.label_crossing = as_int(field(label, "crossing", "label"), "label.crossing");
  const json& future = field(label, "future", "label");
  io_check(future.is_array(), "label.future: expected array");
  for (std::size_t k = 0; k < future.size(); ++k) {
    const std::string ppath = "label.future[" + std::to_string(k) + "]";
    io_check(future[k].is_array() && future[k].size() == 2, ppath + ": expected [x,y]");
    seq.label_future.emplace_back(as_double(future[k][0], ppath),
                                  as_double(future[k][1], ppath));
  }

  try {
    validate_scene(seq);
  } catch (const std::invalid_argument& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
  return seq;
}

// --- checkpoint --------------------------------------------------------------

namespace {

std::string model_config_json(const ModelConfig& c) {
  std::string s = "{";
  s += "\"appearance_dim\":" + num(c.appearance_dim);
  s += ",\"enc_channels1\":" + num(c.enc_channels1);
  s += ",\"enc_channels2\":" + num(c.enc_channels2);
  auto dims = [&](const std::vector<int>& v) {
    std::string d = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) d += ",";
      d += num(v[i]);
    }
    return d + "]";
  };
  s += ",\"ic_hidden\":" + dims(c.ic_hidden);
  s += ",\"lc_hidden\":" + dims(c.lc_hidden);
  s += ",\"tmp_kernel\":" + num(c.tmp_kernel);
  s += ",\"lstm_hidden\":" + num(c.lstm_hidden);
  s += ",\"fcn_hidden\":" + num(c.fcn_hidden);
  s += ",\"horizon\":" + num(c.horizon);
  s += ",\"n_slots\":" + num(c.n_slots);
  s += ",\"threshold\":" + num(c.threshold);
  s += std::string(",\"ablate_signals\":") + (c.ablate_signals ? "true" : "false");
  return s + "}";
}

std::string train_config_json(const TrainConfig& c) {
  std::string s = "{";
  s += "\"learning_rate\":" + num(c.learning_rate);
  s += ",\"epochs\":" + num(c.epochs);
  s += ",\"batch_size\":" + num(c.batch_size);
  s += ",\"l1_lstm\":" + num(c.l1_lstm);
  s += ",\"l2_ic_stream\":" + num(c.l2_ic_stream);
  s += ",\"l2_lc_stream\":" + num(c.l2_lc_stream);
  s += ",\"traj_loss_weight\":" + num(c.traj_loss_weight);
  s += ",\"seed\":" + std::to_string(c.seed);
  s += std::string(",\"shuffle\":") + (c.shuffle ? "true" : "false");
  return s + "}";
}

ModelConfig parse_model_config(const json& j) {
  reject_unknown(j,
                 {"appearance_dim", "enc_channels1", "enc_channels2", "ic_hidden",
                  "lc_hidden", "tmp_kernel", "lstm_hidden", "fcn_hidden", "horizon",
                  "n_slots", "threshold", "ablate_signals"},
                 "config");
  ModelConfig c;
  c.appearance_dim = as_int(field(j, "appearance_dim", "config"), "config.appearance_dim");
  c.enc_channels1 = as_int(field(j, "enc_channels1", "config"), "config.enc_channels1");
  c.enc_channels2 = as_int(field(j, "enc_channels2", "config"), "config.enc_channels2");
  auto dims = [&](const char* key) {
    const json& a = field(j, key, "config");
    io_check(a.is_array() && !a.empty(), std::string("config.") + key +
                                             ": expected nonempty array");
    std::vector<int> v;
    for (std::size_t i = 0; i < a.size(); ++i)
      v.push_back(as_int(a[i], std::string("config.") + key));
    return v;
  };
  c.ic_hidden = dims("ic_hidden");
  c.lc_hidden = dims("lc_hidden");
  c.tmp_kernel = as_int(field(j, "tmp_kernel", "config"), "config.tmp_kernel");
  c.lstm_hidden = as_int(field(j, "lstm_hidden", "config"), "config.lstm_hidden");
  c.fcn_hidden = as_int(field(j, "fcn_hidden", "config"), "config.fcn_hidden");
  c.horizon = as_int(field(j, "horizon", "config"), "config.horizon");
  c.n_slots = as_int(field(j, "n_slots", "config"), "config.n_slots");
  c.threshold = as_double(field(j, "threshold", "config"), "config.threshold");
  const json& ab = field(j, "ablate_signals", "config");
  io_check(ab.is_boolean(), "config.ablate_signals: expected boolean");
  c.ablate_signals = ab.get<bool>();
  return c;
}

TrainConfig parse_train_config(const json& j) {
  reject_unknown(j,
                 {"learning_rate", "epochs", "batch_size", "l1_lstm", "l2_ic_stream",
                  "l2_lc_stream", "traj_loss_weight", "seed", "shuffle"},
                 "train_config");
  TrainConfig c;
  c.learning_rate =
      as_double(field(j, "learning_rate", "train_config"), "train_config.learning_rate");
  c.epochs = as_int(field(j, "epochs", "train_config"), "train_config.epochs");
  c.batch_size = as_int(field(j, "batch_size", "train_config"), "train_config.batch_size");
  c.l1_lstm = as_double(field(j, "l1_lstm", "train_config"), "train_config.l1_lstm");
  c.l2_ic_stream =
      as_double(field(j, "l2_ic_stream", "train_config"), "train_config.l2_ic_stream");
  c.l2_lc_stream =
      as_double(field(j, "l2_lc_stream", "train_config"), "train_config.l2_lc_stream");
  c.traj_loss_weight = as_double(field(j, "traj_loss_weight", "train_config"),
                                 "train_config.traj_loss_weight");
  const json& seed = field(j, "seed", "train_config");
  io_check(seed.is_number_unsigned() || seed.is_number_integer(),
           "train_config.seed: expected integer");
  c.seed = seed.get<std::uint64_t>();
  const json& sh = field(j, "shuffle", "train_config");
  io_check(sh.is_boolean(), "train_config.shuffle: expected boolean");
  c.shuffle = sh.get<bool>();
  return c;
}

}  // namespace

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  std::string s;
  s.reserve(1 << 20);
  s += "{\"version\":1,\"config\":" + model_config_json(ckpt.config);
  s += ",\"train_config\":" + train_config_json(ckpt.train_config);
  s += ",\"params\":{";
  for (std::size_t i = 0; i < ckpt.params.tensors.size(); ++i) {
    const DiffTensor& t = ckpt.params.tensors[i];
    if (i) s += ",";
    s += "\"" + ckpt.params.names[i] + "\":{\"shape\":[";
    for (std::size_t d = 0; d < t.shape.size(); ++d) {
      if (d) s += ",";
      s += num(t.shape[d]);
    }
    s += "],\"values\":[";
    for (int k = 0; k < t.size(); ++k) {
      if (k) s += ",";
      s += num(t.values[k]);
    }
    s += "]}";
  }
  s += "},\"epoch\":" + num(ckpt.epoch) + "}";
  write_atomic(path, s);
}

Checkpoint load_checkpoint(const fs::path& path) {
  const json doc = parse_file(path);
  check_version(doc, "checkpoint");
  reject_unknown(doc, {"version", "config", "train_config", "params", "epoch"},
                 "checkpoint");

  Checkpoint ckpt;
  ckpt.config = parse_model_config(field(doc, "config", "checkpoint"));
  ckpt.train_config = parse_train_config(field(doc, "train_config", "checkpoint"));
  ckpt.epoch = as_int(field(doc, "epoch", "checkpoint"), "checkpoint.epoch");

  // Reconstruct the parameter skeleton from the config, then fill values so
  // that shape or name mismatches are caught against the expected layout.
  ckpt.params = ModelParams::zeros(ckpt.config);
  const json& jp = field(doc, "params", "checkpoint");
  io_check(jp.is_object(), "params: expected object");
  io_check(jp.size() == ckpt.params.tensors.size(),
           "params: expected " + std::to_string(ckpt.params.tensors.size()) +
               " tensors, found " + std::to_string(jp.size()));
  for (std::size_t i = 0; i < ckpt.params.names.size(); ++i) {
    const std::string& name = ckpt.params.names[i];
    auto it = jp.find(name);
    io_check(it != jp.end(), "params: missing parameter '" + name + "'");
    const std::string ppath = "params." + name;
    reject_unknown(*it, {"shape", "values"}, ppath);
    DiffTensor& t = ckpt.params.tensors[i];
    const json& sh = field(*it, "shape", ppath);
    io_check(sh.is_array() && sh.size() == t.shape.size(),
             ppath + ".shape: rank mismatch");
    for (std::size_t d = 0; d < t.shape.size(); ++d) {
      io_check(as_int(sh[d], ppath + ".shape") == t.shape[d],
               ppath + ".shape: dimension " + std::to_string(d) +
                   " does not match config");
    }
    const json& vals = field(*it, "values", ppath);
    io_check(vals.is_array() && static_cast<int>(vals.size()) == t.size(),
             ppath + ".values: expected " + std::to_string(t.size()) + " values");
    for (int k = 0; k < t.size(); ++k)
      t.values[k] = as_double(vals[static_cast<std::size_t>(k)], ppath + ".values");
    io_check(t.values.allFinite(), ppath + ".values: non-finite entries");
  }
  return ckpt;
}

// --- dataset directories ------------------------------------------------------

namespace {

std::string scene_file_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scenes/scene_%05d.json", i);
  return buf;
}

}  // namespace

DatasetDir write_dataset(const fs::path& dir,
                         const std::vector<SceneSequence>& scenes,
                         std::uint64_t split_seed_value) {
  io_check(!scenes.empty(), "write_dataset: no scenes");
  fs::create_directories(dir / "scenes");

  const int n = static_cast<int>(scenes.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(split_seed(split_seed_value, 0xA11));
  rng.shuffle(order);
  const int n_train = static_cast<int>(0.7 * n);
  const int n_val = static_cast<int>(0.1 * n);
  std::vector<std::string> split_of(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    const char* split = r < n_train ? "train" : (r < n_train + n_val ? "val" : "test");
    split_of[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = split;
  }

  DatasetDir out;
  out.root = dir;
  std::string manifest = "{\"version\":1,\"count\":" + std::to_string(n) +
                         ",\"files\":[";
  for (int i = 0; i < n; ++i) {
    const std::string name = scene_file_name(i);
    save_scene(dir / name, scenes[static_cast<std::size_t>(i)]);
    if (i) manifest += ",";
    manifest += "{\"file\":\"" + name + "\",\"split\":\"" +
                split_of[static_cast<std::size_t>(i)] + "\"}";
    out.entries.push_back({name, split_of[static_cast<std::size_t>(i)]});
  }
  manifest += "]}";
  write_atomic(dir / "manifest.json", manifest);
  return out;
}

DatasetDir read_manifest(const fs::path& dir) {
  const json doc = parse_file(dir / "manifest.json");
  check_version(doc, "manifest");
  reject_unknown(doc, {"version", "count", "files"}, "manifest");
  const int count = as_int(field(doc, "count", "manifest"), "manifest.count");
  const json& files = field(doc, "files", "manifest");
  io_check(files.is_array() && static_cast<int>(files.size()) == count,
           "manifest.files: count mismatch");

  DatasetDir out;
  out.root = dir;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string ppath = "manifest.files[" + std::to_string(i) + "]";
    reject_unknown(files[i], {"file", "split"}, ppath);
    ManifestEntry e;
    e.file = as_string(field(files[i], "file", ppath), ppath + ".file");
    e.split = as_string(field(files[i], "split", ppath), ppath + ".split");
    io_check(e.split == "train" || e.split == "val" || e.split == "test",
             ppath + ".split: expected train|val|test, got '" + e.split + "'");
    out.entries.push_back(std::move(e));
  }
  return out;
}

std::vector<SceneSequence> load_split(const fs::path& dir, const std::string& split) {
  DatasetDir d = read_manifest(dir);
  std::vector<SceneSequence> out;
  for (const auto& e : d.entries) {
    if (e.split == split) out.push_back(load_scene(dir / e.file));
  }
  io_check(!out.empty(), "dataset '" + dir.string() + "' has no scenes in split '" +
                             split + "'");
  return out;
}

void write_loss_csv(const fs::path& path, const std::vector<EpochLog>& log) {
  std::string s = "epoch,train_loss,val_loss\n";
  for (const EpochLog& e : log) {
    s += std::to_string(e.epoch) + "," + num(e.train_loss) + "," + num(e.val_loss) +
         "\n";
  }
  write_atomic(path, s);
}

}  // namespace pedcross
