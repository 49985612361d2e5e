// SPDX-License-Identifier: Apache-2.0
// Preload shim: appends one line per non-AF_UNIX socket() call to the file
// named by SFORGE_SOCKET_LOG, then forwards the call.

#include <dlfcn.h>
#include <sys/socket.h>

#include <cstdio>
#include <cstdlib>

extern "C" int socket(int domain, int type, int protocol) {
  using socket_fn = int (*)(int, int, int);
  static socket_fn real = reinterpret_cast<socket_fn>(dlsym(RTLD_NEXT, "socket"));
  if (domain != AF_UNIX) {
    if (const char* path = std::getenv("SFORGE_SOCKET_LOG")) {
      if (FILE* f = std::fopen(path, "a")) {
        std::fprintf(f, "socket domain=%d type=%d\n", domain, type);
        std::fclose(f);
      }
    }
  }
  return real(domain, type, protocol);
}
