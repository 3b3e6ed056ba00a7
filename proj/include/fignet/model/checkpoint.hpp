#pragma once

#include <map>
#include <string>

#include "fignet/nn/param.hpp"

namespace fignet {

// Single-file archive of named float tensors plus a JSON header carrying the
// stage name, epoch, validation metric, model config echo and vocabulary.
// The byte layout is fixed so save/load round-trips bit-exactly.
struct Checkpoint {
    std::string header_json;
    std::map<std::string, nn::MatF> tensors;

    const nn::MatF& tensor(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const std::string& header_json,
                     const nn::ParamRefs<float>& params);
Checkpoint load_checkpoint(const std::string& path);

// Copies tensors into matching params; throws LoadError on a missing name or
// shape mismatch.
void apply_checkpoint(const Checkpoint& ckpt, const nn::ParamRefs<float>& params);

}  // namespace fignet
