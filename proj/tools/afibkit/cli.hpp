#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace afibkit::cli {

// Exit codes: 0 success, 1 domain error ("ErrorName: detail" on err),
// 2 usage error. `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace afibkit::cli
