#pragma once

#include "pedcross/scene.hpp"
#include "pedcross/trainer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pedcross {

// Raised on schema violations, version mismatches, and invariant failures;
// the message carries a field path such as frames[3].objects[1].bbox.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Scene file, version 1:
//   {version, image_dims:[W,H], target_index,
//    frames:[{objects:[{id, kind, bbox:[x1,y1,x2,y2], signal, appearance}]}],
//    label:{crossing, future:[[x,y],...]}}
// Doubles are written with 17 significant digits so values round-trip
// bit-exactly. Unknown fields are rejected on load. Writes go to a temp file
// in the same directory and are renamed into place.
void save_scene(const std::filesystem::path& path, const SceneSequence& seq);
SceneSequence load_scene(const std::filesystem::path& path);

// Checkpoint file, version 1:
//   {version, config:{...}, train_config:{...},
//    params:{name:{shape:[...], values:[...]}}, epoch}
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// A dataset directory holds scenes/scene_NNNNN.json plus manifest.json
// listing each file and its split. Splits are a seeded 70/10/20 shuffle.
struct ManifestEntry {
  std::string file;
  std::string split;  // train | val | test
};

struct DatasetDir {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;
};

DatasetDir write_dataset(const std::filesystem::path& dir,
                         const std::vector<SceneSequence>& scenes,
                         std::uint64_t split_seed_value);
DatasetDir read_manifest(const std::filesystem::path& dir);
std::vector<SceneSequence> load_split(const std::filesystem::path& dir,
                                      const std::string& split);

// Epoch losses as CSV: header epoch,train_loss,val_loss then one row per
// epoch with 17-significant-digit values.
void write_loss_csv(const std::filesystem::path& path,
                    const std::vector<EpochLog>& log);

}  // namespace pedcross
