#pragma once

#include <filesystem>
#include <istream>
#include <ostream>

#include "twinfeed/channel.hpp"

namespace twinfeed {

enum class TraceFormat { binary, text };

/// Reads a trace, detecting the format from the leading bytes: "CTRC" selects
/// the binary layout, anything else is parsed as `t,rx,tx,re,im` CSV.
ChannelTrace load_trace(const std::filesystem::path& path);
ChannelTrace read_trace(std::istream& is);

void save_trace(const ChannelTrace& trace, const std::filesystem::path& path,
                TraceFormat format = TraceFormat::binary);
void write_trace_binary(const ChannelTrace& trace, std::ostream& os);
void write_trace_text(const ChannelTrace& trace, std::ostream& os);

}  // namespace twinfeed
