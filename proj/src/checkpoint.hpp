#pragma once

#include <filesystem>

#include "trainer.hpp"

namespace emo2vec {

// Sectioned binary container. Doubles are stored bit-exact, so a reloaded
// checkpoint reproduces forward outputs bitwise.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace emo2vec
