/* Thin launcher over the shared library's C API. */
#include <emo2vec/emo2vec.h>

int main(int argc, char** argv) {
  return e2v_main(argc, (const char* const*)argv);
}
