#pragma once

#include <string>

#include "prodemb/encoder.hpp"

namespace prodemb {

/// Versioned binary model bundle: header (config, detector mode,
/// vocabulary), then the named parameter tensors in registration order.
/// save(load(p)) is byte-identical to the file at p.
void save_checkpoint(const ProductEncoder& encoder, const std::string& path);
ProductEncoder load_checkpoint(const std::string& path);

} // namespace prodemb
