#pragma once

#include <filesystem>
#include <string>

#include "rflnn/networks.hpp"

namespace rflnn {

// Models as JSON documents. Matrices are nested row arrays; doubles are
// written with round-trip precision so a load reproduces the model exactly.
std::string to_json(const ElmModel& model, int indent = -1);
std::string to_json(const BlsModel& model, int indent = -1);
std::string to_json(const StackedBlsModel& model, int indent = -1);

ElmModel elm_from_json(const std::string& text);
BlsModel bls_from_json(const std::string& text);
StackedBlsModel stacked_bls_from_json(const std::string& text);

/// Writes any of the three model kinds to `path`.
template <typename Model>
void save_model(const Model& model, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace rflnn
