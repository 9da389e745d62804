#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace maternfit::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitOptimization = 3, kExitIo = 4 };

/// Entry point shared by the executable and the tests.
///   estimate INPUT [--method fisher-bt|nelder-mead|both] [--lower a,b,c] [--upper a,b,c]
///                  [--seed N] [--out PATH] [--trace]
///   simulate OUT   [--n N] [--theta a,b,c] [--seed N] [--scheme grid|uniform]
///                  [--replicates M] [--domain x0,y0,x1,y1]
///   loglik INPUT   --theta a,b,c [--out PATH]
///   benchmark      --out DIR [--theta a,b,c ...] [--n N1,N2,...] [--replicates M]
///                  [--method ...] [--seed N] [--jobs N] [--lower ...] [--upper ...] [--scheme ...]
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace maternfit::cli
