#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mmgest/nn/train.hpp"

namespace mmgest::app {

/// Class names for the first `classes` labels.
std::vector<std::string> class_names(std::size_t classes);

/// Text table: one row per true class, one column per predicted class,
/// row-normalized percentages, then per-class and overall accuracy.
/// `header` lines are printed above the table.
std::string format_confusion(const nn::ConfusionMatrix& cm, const std::vector<std::string>& header);
/// truth,predicted,count,fraction rows.
void write_confusion_csv(const nn::ConfusionMatrix& cm, const std::filesystem::path& path);

inline constexpr const char* kHistoryHeader = "epoch,loss,accuracy,lr";

void write_history_csv(const nn::History& history, const std::filesystem::path& path);
nn::History read_history_csv(const std::filesystem::path& path);
/// Loss and accuracy curves on two stacked panels.
std::string history_svg(const nn::History& history);
void write_history_svg(const nn::History& history, const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mmgest::app
