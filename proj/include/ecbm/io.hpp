#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "ecbm/model.hpp"

namespace ecbm {

// CSV columns: x0..x{d_i-1}, c0..c{k-1}, y. Values use shortest round-trip formatting.
std::string dataset_to_csv(const Dataset& d);
// num_classes defaults to max(y)+1 (at least 2) unless given.
Dataset dataset_from_csv(std::string_view text, std::size_t num_classes = 0);

// Sidecar holding concept names and the class count.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);
void save_dataset(const Dataset& d, const std::filesystem::path& csv);
Dataset load_dataset(const std::filesystem::path& csv);

std::string checkpoint_to_json(const Cbm& m);
Cbm checkpoint_from_json(std::string_view text);
void save_checkpoint(const Cbm& m, const std::filesystem::path& path);
Cbm load_checkpoint(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
void append_text_file(const std::filesystem::path& path, std::string_view text);

std::string format_double(double v);

}  // namespace ecbm
