int __fastcall main(int argc, const char **argv, const char **envp)
{
  int n; // [rsp+4h] [rbp-1Ch] BYREF
  int i; // [rsp+8h] [rbp-18h]
  __int64 sum; // [rsp+10h] [rbp-10h]
  _DWORD *v; // [rsp+18h] [rbp-8h]

  scanf("%d", &n);
  v = malloc(4LL * n);
  for ( i = 0; i <= n; ++i )
    v[i] = i * i;
  sum = 0LL;
  for ( i = 0; i < n; ++i )
    sum += (int)v[i];
  printf("%lld\n", sum);
  free(v);
  return 0;
}
