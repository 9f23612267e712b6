#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "selftrack/autoencoder.hpp"

namespace selftrack {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary model container; layout in docs/formats.md. Doubles are stored
/// as their IEEE-754 bit patterns, so save/load roundtrips are exact.
void save_checkpoint(const AutoEncoderModel& model, std::ostream& out);
void save_checkpoint_file(const AutoEncoderModel& model, const std::filesystem::path& path);

AutoEncoderModel load_checkpoint(std::istream& in);
AutoEncoderModel load_checkpoint_file(const std::filesystem::path& path);

}  // namespace selftrack
