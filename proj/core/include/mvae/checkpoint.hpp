#ifndef MVAE_CHECKPOINT_HPP
#define MVAE_CHECKPOINT_HPP

#include <filesystem>

#include "mvae/classifier.hpp"
#include "mvae/model.hpp"

namespace mvae {

// Checkpoint container: magic "MVM1", u32 little-endian byte length of a
// UTF-8 config echo, the echo itself, then every parameter matrix as a
// matrix record in the order of parameter_blocks(). The echo is the
// serialized run config plus bookkeeping lines the config schema does
// not carry (the attribute width, the trained flag, classifier shape).
void save_checkpoint(const std::filesystem::path& path, MvaeModel& model);
MvaeModel load_checkpoint(const std::filesystem::path& path);

void save_classifier(const std::filesystem::path& path, MlpClassifier& clf,
                     const ModelConfig& cfg);
MlpClassifier load_classifier(const std::filesystem::path& path);

}  // namespace mvae

#endif
