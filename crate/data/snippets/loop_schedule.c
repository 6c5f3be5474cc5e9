const int N = 8;
const int M = 4;

void chunked_sum(int v[32], int w[4])
{
    int i;
    int j;
    #pragma stml loop_schedule
    for (j = 0; j < M; j++) {
        w[j] = 0;
        for (i = 0; i < N; i++) {
            w[j] += v[j * N + i];
        }
    }
}
