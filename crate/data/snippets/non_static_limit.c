const int N = 8;

void scan(int v[16])
{
    int i;
    int j;
    for (j = 0; j < N; j++) {
        for (i = 0; i < size(v); i++) {
            update(v[i]);
        }
        clean(v);
    }
}
