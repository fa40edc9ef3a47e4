#pragma once

#include <string>
#include <variant>

#include "mvhedge/models/fnn.hpp"
#include "mvhedge/models/gru.hpp"
#include "mvhedge/models/hw.hpp"

namespace mvhedge {

/// The practitioner baseline: predict the quote's own BS delta.
struct BsBaselineModel {
    OptionKind kind = OptionKind::Call;
};

using HedgeModelAny = std::variant<FnnHedgeModel, GruHedgeModel, HwModel, BsBaselineModel>;

/// Binary checkpoint layout:
///   magic "MVHG", version byte 1,
///   metadata block (u32 pair count, then length-prefixed UTF-8 key/value),
///   parameter block (u64 count, little-endian f64 in documented slot order),
///   FNV-1a 64-bit checksum over everything between the version byte and the
///   checksum itself.
/// Doubles stored in metadata (running statistics, feature statistics) use
/// shortest round-trip decimal text, so load(save(m)) reproduces predictions
/// bit for bit.
void save_checkpoint(const HedgeModelAny& model, const std::string& path);
void save_checkpoint(const FnnHedgeModel& model, const std::string& path);
void save_checkpoint(const GruHedgeModel& model, const std::string& path);
void save_checkpoint(const HwModel& model, const std::string& path);
void save_checkpoint(const BsBaselineModel& model, const std::string& path);

/// Throws format_error (with the failing byte offset) on bad magic, version,
/// checksum or truncation; io_error when the file cannot be read.
HedgeModelAny load_checkpoint(const std::string& path);

OptionKind model_kind(const HedgeModelAny& model);
ModelVariant model_variant(const HedgeModelAny& model);

/// Guard for using a checkpoint with the wrong option kind.
void expect_kind(const HedgeModelAny& model, OptionKind kind);

}  // namespace mvhedge
