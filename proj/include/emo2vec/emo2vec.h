/*
 * emo2vec C API.
 *
 * The core library is C++; this header is the stable binding surface for
 * other languages and for the bundled command line tool. Objects are opaque
 * handles created and destroyed by the library. Every fallible call returns
 * an e2v_status; on failure e2v_last_error() describes what went wrong
 * (per thread, valid until the next failing call on that thread).
 */
#ifndef EMO2VEC_H
#define EMO2VEC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum e2v_status {
  E2V_OK = 0,
  E2V_ERR_INVALID_ARGUMENT = 1,
  E2V_ERR_IO = 2,
  E2V_ERR_PARSE = 3,
  E2V_ERR_USAGE = 4,
  E2V_ERR_RUNTIME = 5
} e2v_status;

typedef struct e2v_embedding e2v_embedding; /* word vector table */
typedef struct e2v_corpus e2v_corpus;       /* multi-task corpus directory */
typedef struct e2v_model e2v_model;         /* training checkpoint */

/* Message for the most recent failure on this thread; never NULL. */
const char* e2v_last_error(void);

/* Frees strings returned through char** out-parameters. */
void e2v_string_free(char* s);

/* ---- embeddings ------------------------------------------------------- */

/* Reads a plain-text (optionally gzip-compressed) vector file. */
e2v_status e2v_embedding_import(const char* path, e2v_embedding** out);
e2v_status e2v_embedding_export(const e2v_embedding* emb, const char* path);
void e2v_embedding_free(e2v_embedding* emb);

size_t e2v_embedding_dim(const e2v_embedding* emb);
/* Number of words, special rows excluded. */
size_t e2v_embedding_words(const e2v_embedding* emb);
/* Returns E2V_ERR_INVALID_ARGUMENT when the word is unknown. `buffer` must
 * hold e2v_embedding_dim() doubles. */
e2v_status e2v_embedding_vector(const e2v_embedding* emb, const char* word,
                                double* buffer, size_t buffer_len);
/* Union-vocabulary concatenation (dim = dim_a + dim_b, zero-filled gaps). */
e2v_status e2v_embedding_concat(const e2v_embedding* a, const e2v_embedding* b,
                                e2v_embedding** out);

/* ---- corpora ---------------------------------------------------------- */

/* Opens a corpus directory (large.tsv plus small/<name>.* datasets). */
e2v_status e2v_corpus_open(const char* dir, e2v_corpus** out);
void e2v_corpus_free(e2v_corpus* corpus);
size_t e2v_corpus_small_count(const e2v_corpus* corpus);
/* Label distribution and sizes as a JSON document (caller frees). */
e2v_status e2v_corpus_stats_json(const e2v_corpus* corpus, char** out_json);

/* ---- models ----------------------------------------------------------- */

e2v_status e2v_model_load(const char* path, e2v_model** out);
e2v_status e2v_model_save(const e2v_model* model, const char* path);
void e2v_model_free(e2v_model* model);
/* Copies the model's embedding table into a fresh handle. */
e2v_status e2v_model_embedding(const e2v_model* model, e2v_embedding** out);

/* ---- training --------------------------------------------------------- */

/* config_json takes the same keys as the checkpoint's config section, e.g.
 * {"lr":0.001,"batch_size":16,"dim":100,"seed":13}. Pass NULL for defaults.
 * Pre-trains the CNN classifier on the corpus's large dataset. */
e2v_status e2v_pretrain(const e2v_corpus* corpus, const char* config_json,
                        e2v_model** out);

/* Joint multi-task training over the whole corpus; init may be NULL or a
 * model from e2v_pretrain. */
e2v_status e2v_train(const e2v_corpus* corpus, const char* config_json,
                     const e2v_model* init, e2v_model** out);

/* ---- command line ----------------------------------------------------- */

/* Full CLI entry point (prepare/pretrain/train/export/concat/eval/stats).
 * Returns the process exit code: 0 ok, 1 runtime error, 2 usage error. */
int e2v_main(int argc, const char* const* argv);

#ifdef __cplusplus
}
#endif

#endif /* EMO2VEC_H */
