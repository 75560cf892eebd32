#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace sideband {

// Non-fatal warnings go to stderr unless a sink is installed.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

// Typed failures surfaced by the CLI as machine-readable records.
class IllConditioned : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Divergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sideband
