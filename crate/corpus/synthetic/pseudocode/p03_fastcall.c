int __fastcall gcd(int a1, int a2)
{
  int v2; // edx

  while ( a2 )
  {
    v2 = a1 % a2;
    a1 = a2;
    a2 = v2;
  }
  return a1;
}

int __fastcall main(int a1, char **a2, char **a3)
{
  int v4; // [rsp+10h] [rbp-10h] BYREF
  int v5; // [rsp+14h] [rbp-Ch] BYREF

  scanf("%d %d", &v4, &v5);
  printf("%d\n", gcd(v4, v5));
  return 0;
}
